#include "flock/flocking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace flock {

double Psi::operator()(double r) const {
    const double v = phi(r);
    return scale * (kind == PsiKind::PhiSquared ? v * v : v);
}

double Psi::integral(double a, double b) const { return scale * definite_integral(phi, power(), a, b); }

TailIntegral Psi::tail(double a) const {
    auto t = tail_integral(phi, power(), a);
    if (!t.diverges)
        t.value *= scale;
    return t;
}

double Psi::minimum_up_to(double r) const {
    if (phi.kind() != KernelKind::Tabulated)
        return (*this)(r);
    // Grid scan at resolution 1e-3 * r, plus the endpoint.
    constexpr int kSamples = 1000;
    double best = (*this)(r);
    for (int k = 0; k < kSamples; ++k)
        best = std::min(best, (*this)(r * static_cast<double>(k) / kSamples));
    return best;
}

double energy(double d_x, double d_v, const Psi &psi, double alpha) {
    if (!(d_x >= 0.0) || !(d_v >= 0.0))
        throw std::invalid_argument("energy: diameters must be non-negative");
    return d_v + alpha * psi.integral(0.0, d_x);
}

std::optional<double> solve_flock_diameter(double d_x0, double d_v0, double alpha, const Psi &psi) {
    if (!(d_x0 >= 0.0) || !(d_v0 >= 0.0))
        throw std::invalid_argument("solve_flock_diameter: diameters must be non-negative");
    if (!(alpha > 0.0))
        throw std::invalid_argument("solve_flock_diameter: alpha must be positive");
    if (d_v0 == 0.0)
        return d_x0;
    const TailIntegral tail = psi.tail(d_x0);
    if (!tail.diverges && d_v0 > alpha * tail.value)
        return std::nullopt;

    auto reach = [&](double r) { return alpha * psi.integral(d_x0, r); };

    // Bracket by doubling the distance from d_X0.
    double width = std::max(1.0, d_x0);
    double lo = d_x0, hi = d_x0 + width;
    while (reach(hi) < d_v0) {
        lo = hi;
        width *= 2.0;
        hi = d_x0 + width;
        if (!std::isfinite(hi))
            return std::nullopt; // d_V0 equals the finite tail: d* is at infinity
    }
    for (int it = 0; it < 500 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (reach(mid) < d_v0)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::Unconditional:
        return "unconditional";
    case Verdict::ConditionalSatisfied:
        return "conditional-satisfied";
    case Verdict::NotGuaranteed:
        return "not-guaranteed";
    }
    return "?";
}

std::string_view to_string(PsiKind k) { return k == PsiKind::PhiSquared ? "phi-squared" : "phi"; }

FlockingCertificate certify(Diameters initial, double alpha, const Psi &psi) {
    if (!(alpha > 0.0))
        throw std::invalid_argument("certify: alpha must be positive");
    FlockingCertificate c;
    c.psi_kind = psi.kind;
    c.psi_scale = psi.scale;
    c.d_x0 = initial.d_x;
    c.d_v0 = initial.d_v;
    c.alpha = alpha;
    c.tail = psi.tail(initial.d_x);
    if (!c.tail.diverges)
        c.tail.value *= alpha;

    if (c.tail.diverges)
        c.verdict = Verdict::Unconditional;
    else if (initial.d_v <= c.tail.value)
        c.verdict = Verdict::ConditionalSatisfied;
    else
        c.verdict = Verdict::NotGuaranteed;

    if (c.verdict != Verdict::NotGuaranteed) {
        c.d_star = solve_flock_diameter(initial.d_x, initial.d_v, alpha, psi);
        if (c.d_star)
            c.predicted_rate = alpha * psi.minimum_up_to(*c.d_star);
    }
    return c;
}

FlockingCertificate certify(Diameters initial, const ModelSpec &model, PsiKind kind) {
    model.validate();
    Psi psi{model.phi, kind, 1.0};
    switch (model.model) {
    case ModelKind::CuckerSmale:
    case ModelKind::RelativeInfluence:
        break;
    case ModelKind::Leader:
        if (kind == PsiKind::PhiSquared)
            psi.scale = model.beta * model.beta;
        break;
    case ModelKind::Vision:
        throw std::invalid_argument("certify: no flocking certificate exists for the vision model");
    }
    return certify(initial, model.alpha, psi);
}

double fit_exponential_rate(std::span<const double> times, std::span<const double> d_v) {
    if (times.size() != d_v.size())
        throw std::invalid_argument("fit_exponential_rate: series lengths differ");
    std::size_t n = 0;
    while (n < d_v.size() && d_v[n] > 0.0)
        ++n;
    if (n < 3)
        throw std::invalid_argument("fit_exponential_rate: fewer than 3 positive samples");

    const std::size_t first = n / 2;
    const double count = static_cast<double>(n - first);
    double mt = 0.0, my = 0.0;
    for (std::size_t k = first; k < n; ++k) {
        mt += times[k];
        my += std::log(d_v[k]);
    }
    mt /= count;
    my /= count;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = first; k < n; ++k) {
        const double dt = times[k] - mt;
        sxy += dt * (std::log(d_v[k]) - my);
        sxx += dt * dt;
    }
    if (sxx == 0.0)
        throw std::invalid_argument("fit_exponential_rate: sample times are not distinct");
    return -sxy / sxx;
}

} // namespace flock
