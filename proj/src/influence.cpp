#include "flock/influence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace flock {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Antiderivative helper: integral of (1+r)^-p over [a, b] for finite a <= b.
double power_law_integral(double p, double a, double b) {
    if (b <= a)
        return 0.0;
    if (p == 1.0)
        return std::log1p(b) - std::log1p(a);
    if (std::isinf(b))
        return std::pow(1.0 + a, 1.0 - p) / (p - 1.0);
    return (std::pow(1.0 + a, 1.0 - p) - std::pow(1.0 + b, 1.0 - p)) / (p - 1.0);
}

void require_finite_points(PointSet points, const char *what) {
    if (points.dim == 0)
        throw std::invalid_argument(std::string(what) + ": dimension must be positive");
    if (points.coords.size() % points.dim != 0)
        throw std::invalid_argument(std::string(what) + ": coordinate count not a multiple of dim");
    for (double c : points.coords)
        if (!std::isfinite(c))
            throw std::invalid_argument(std::string(what) + ": non-finite coordinate");
}

// phi_ij for all pairs, evaluated once; pairwise sums are then taken in index
// order so results do not depend on any schedule.
SquareMatrix kernel_table(PointSet positions, const InfluenceFunction &phi) {
    const std::size_t n = positions.count();
    SquareMatrix k(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = phi(distance(positions.point(i), positions.point(j)));
            k(i, j) = v;
            k(j, i) = v;
        }
    return k;
}

void complete_diagonal(SquareMatrix &a) {
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        double off = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                off += a(i, j);
        a(i, i) = std::max(0.0, 1.0 - off);
    }
}

} // namespace

InfluenceFunction InfluenceFunction::power_law(double s) {
    if (!(s > 0.0) || !std::isfinite(s))
        throw std::invalid_argument("power-law exponent s must be positive and finite");
    InfluenceFunction f;
    f.kind_ = KernelKind::PowerLaw;
    f.s_ = s;
    return f;
}

InfluenceFunction InfluenceFunction::power_law_cutoff(double s, double cutoff) {
    InfluenceFunction f = power_law(s);
    if (!(cutoff > 0.0) || !std::isfinite(cutoff))
        throw std::invalid_argument("cutoff radius R must be positive and finite");
    f.kind_ = KernelKind::PowerLawCutoff;
    f.cutoff_ = cutoff;
    return f;
}

InfluenceFunction InfluenceFunction::tabulated(std::vector<Knot> knots) {
    if (knots.empty())
        throw std::invalid_argument("tabulated kernel needs at least one knot");
    if (knots.front().r != 0.0 || knots.front().value != 1.0)
        throw std::invalid_argument("tabulated kernel must start at (0, 1)");
    for (std::size_t k = 1; k < knots.size(); ++k) {
        if (!(knots[k].r > knots[k - 1].r) || !std::isfinite(knots[k].r))
            throw std::invalid_argument("tabulated knots must have strictly increasing r");
        if (!(knots[k].value <= knots[k - 1].value))
            throw std::invalid_argument("tabulated kernel must be non-increasing");
        if (!(knots[k].value >= 0.0))
            throw std::invalid_argument("tabulated kernel must be non-negative");
    }
    InfluenceFunction f;
    f.kind_ = KernelKind::Tabulated;
    f.knots_ = std::move(knots);
    return f;
}

double InfluenceFunction::operator()(double r) const {
    if (!(r >= 0.0))
        throw std::domain_error("influence function evaluated at negative (or NaN) distance");
    switch (kind_) {
    case KernelKind::PowerLaw:
        return std::pow(1.0 + r, -s_);
    case KernelKind::PowerLawCutoff:
        return r < cutoff_ ? std::pow(1.0 + r, -s_) : 0.0;
    case KernelKind::Tabulated: {
        if (r >= knots_.back().r)
            return r == knots_.back().r ? knots_.back().value : 0.0;
        auto hi = std::upper_bound(knots_.begin(), knots_.end(), r,
                                   [](double x, const Knot &k) { return x < k.r; });
        auto lo = hi - 1;
        const double t = (r - lo->r) / (hi->r - lo->r);
        return lo->value + t * (hi->value - lo->value);
    }
    }
    return 0.0;
}

double InfluenceFunction::support_radius() const {
    switch (kind_) {
    case KernelKind::PowerLaw:
        return kInf;
    case KernelKind::PowerLawCutoff:
        return cutoff_;
    case KernelKind::Tabulated:
        return knots_.back().r;
    }
    return kInf;
}

double eval_influence(const InfluenceFunction &phi, double r) { return phi(r); }

double definite_integral(const InfluenceFunction &phi, int power, double a, double b) {
    if (power != 1 && power != 2)
        throw std::invalid_argument("integral power must be 1 or 2");
    if (!(a >= 0.0))
        throw std::domain_error("integration bound must be non-negative");
    if (b <= a)
        return 0.0;
    const double p = power * phi.exponent();
    switch (phi.kind()) {
    case KernelKind::PowerLaw:
        return power_law_integral(p, a, b);
    case KernelKind::PowerLawCutoff:
        return power_law_integral(p, a, std::min(b, phi.cutoff()));
    case KernelKind::Tabulated: {
        // phi^power is a polynomial of degree <= 2 on each segment, so one
        // adaptive pass per segment converges immediately.
        const auto &knots = phi.knots();
        const double end = std::min(b, knots.back().r);
        auto integrand = [&](double r) {
            const double v = phi(r);
            return power == 1 ? v : v * v;
        };
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
            const double lo = std::max(a, knots[k].r);
            const double hi = std::min(end, knots[k + 1].r);
            if (hi > lo)
                total += adaptive_simpson(integrand, lo, hi, 1e-12);
        }
        return total;
    }
    }
    return 0.0;
}

TailIntegral tail_integral(const InfluenceFunction &phi, int power, double a) {
    if (power != 1 && power != 2)
        throw std::invalid_argument("integral power must be 1 or 2");
    if (!(a >= 0.0))
        throw std::domain_error("tail integral lower bound must be non-negative");
    if (phi.kind() == KernelKind::PowerLaw && power * phi.exponent() <= 1.0)
        return TailIntegral::divergent();
    return TailIntegral::finite(definite_integral(phi, power, a, kInf));
}

std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::CuckerSmale:
        return "cs";
    case ModelKind::RelativeInfluence:
        return "mt";
    case ModelKind::Leader:
        return "leader";
    case ModelKind::Vision:
        return "vision";
    }
    return "?";
}

std::string_view to_string(VisionNormalization norm) {
    return norm == VisionNormalization::CsStyle ? "cs-style" : "mt-style";
}

std::string_view to_string(KernelKind kind) {
    switch (kind) {
    case KernelKind::PowerLaw:
        return "power-law";
    case KernelKind::PowerLawCutoff:
        return "cutoff";
    case KernelKind::Tabulated:
        return "tabulated";
    }
    return "?";
}

double InfluenceMatrix::min_entry() const {
    const auto &d = entries.data();
    return d.empty() ? 0.0 : *std::min_element(d.begin(), d.end());
}

double InfluenceMatrix::max_entry() const {
    const auto &d = entries.data();
    return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

double distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = b[k] - a[k];
        sum += d * d;
    }
    return std::sqrt(sum);
}

InfluenceMatrix build_cs(PointSet positions, const InfluenceFunction &phi) {
    require_finite_points(positions, "build_cs");
    const std::size_t n = positions.count();
    if (n == 0)
        throw std::invalid_argument("build_cs: need at least one agent");
    SquareMatrix a = kernel_table(positions, phi);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                a(i, j) *= inv_n;
    complete_diagonal(a);
    return {std::move(a), ModelKind::CuckerSmale};
}

InfluenceMatrix build_mt(PointSet positions, const InfluenceFunction &phi) {
    require_finite_points(positions, "build_mt");
    const std::size_t n = positions.count();
    if (n == 0)
        throw std::invalid_argument("build_mt: need at least one agent");
    SquareMatrix a = kernel_table(positions, phi);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = a.row(i);
        double total = 0.0;
        for (double v : row)
            total += v;
        for (double &v : row)
            v /= total;
    }
    return {std::move(a), ModelKind::RelativeInfluence};
}

InfluenceMatrix build_leader(PointSet positions, const InfluenceFunction &phi, double beta,
                             std::size_t leader) {
    require_finite_points(positions, "build_leader");
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("build_leader: beta must lie in (0, 1)");
    const std::size_t n = positions.count();
    if (leader >= n)
        throw std::invalid_argument("build_leader: leader index out of range");
    SquareMatrix a = kernel_table(positions, phi);
    const double follower_weight = (1.0 - beta) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = a.row(i);
        if (i == leader) {
            std::fill(row.begin(), row.end(), 0.0);
            row[leader] = 1.0;
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (j == leader)
                row[j] *= beta;
            else if (j != i)
                row[j] *= follower_weight;
        }
    }
    complete_diagonal(a);
    return {std::move(a), ModelKind::Leader};
}

bool sees(std::span<const double> xi, std::span<const double> vi, std::span<const double> xj,
          double gamma) {
    double speed2 = 0.0;
    for (double c : vi)
        speed2 += c * c;
    const double speed = std::sqrt(speed2);
    if (speed < kVisionMinSpeed || gamma <= -1.0)
        return true;
    const double r = distance(xi, xj);
    if (r == 0.0)
        return true;
    double dot = 0.0;
    for (std::size_t k = 0; k < xi.size(); ++k)
        dot += vi[k] * (xj[k] - xi[k]);
    return dot / (speed * r) >= gamma;
}

InfluenceMatrix build_vision(PointSet positions, PointSet velocities, const InfluenceFunction &phi,
                             double gamma, VisionNormalization normalization) {
    require_finite_points(positions, "build_vision");
    require_finite_points(velocities, "build_vision");
    if (!(gamma >= -1.0 && gamma <= 1.0))
        throw std::invalid_argument("build_vision: gamma must lie in [-1, 1]");
    const std::size_t n = positions.count();
    if (n == 0)
        throw std::invalid_argument("build_vision: need at least one agent");
    if (velocities.count() != n || velocities.dim != positions.dim)
        throw std::invalid_argument("build_vision: positions and velocities disagree in shape");

    SquareMatrix a = kernel_table(positions, phi);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = a.row(i);
        // Agent i always counts itself, so a full cone reproduces the base builder.
        std::size_t seen = 1;
        double seen_weight = row[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            if (sees(positions.point(i), velocities.point(i), positions.point(j), gamma)) {
                ++seen;
                seen_weight += row[j];
            } else {
                row[j] = 0.0;
            }
        }
        const double scale = normalization == VisionNormalization::CsStyle
                                 ? 1.0 / static_cast<double>(seen)
                                 : 1.0 / seen_weight;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                row[j] *= scale;
    }
    complete_diagonal(a);
    return {std::move(a), ModelKind::Vision};
}

} // namespace flock
