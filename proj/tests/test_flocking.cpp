#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "flock/activeset.hpp"
#include "flock/flocking.hpp"
#include "oracles.hpp"

using namespace flock;

namespace {

Psi psi_phi(double s) { return {InfluenceFunction::power_law(s), PsiKind::Phi, 1.0}; }
Psi psi_sq(double s) { return {InfluenceFunction::power_law(s), PsiKind::PhiSquared, 1.0}; }

ModelSpec model(ModelKind kind, double s, double alpha = 1.0) {
    ModelSpec m;
    m.model = kind;
    m.phi = InfluenceFunction::power_law(s);
    m.alpha = alpha;
    return m;
}

} // namespace

TEST_CASE("energy examples") {
    CHECK(energy(0.0, 1.25, psi_sq(1.0), 2.0) == 1.25);
    for (double dx : {0.5, 1.0, 7.0})
        CHECK(energy(dx, 0.3, psi_phi(1.0), 1.0) == doctest::Approx(0.3 + std::log1p(dx)).epsilon(1e-14));
    const double ref = oracle::simpson([](double r) { return oracle::power_law(0.5, r); }, 0.0, 4.0);
    CHECK(energy(4.0, 0.0, psi_sq(0.25), 1.5) == doctest::Approx(1.5 * ref).epsilon(1e-10));
    CHECK_THROWS_AS(energy(-1.0, 0.0, psi_sq(1.0), 1.0), std::invalid_argument);
}

TEST_CASE("solve_flock_diameter examples") {
    CHECK(solve_flock_diameter(3.0, 0.0, 1.0, psi_sq(1.0)) == 3.0);
    const auto d = solve_flock_diameter(0.0, 1.0, 1.0, psi_phi(1.0));
    REQUIRE(d);
    CHECK(std::abs(*d - (std::numbers::e - 1.0)) <= 1e-10);
    CHECK_FALSE(solve_flock_diameter(0.0, 2.0, 1.0, psi_sq(1.0)));
    CHECK_THROWS_AS(solve_flock_diameter(0.0, 1.0, 0.0, psi_sq(1.0)), std::invalid_argument);
}

TEST_CASE("d* re-integrates to d_V0 and grows with d_V0") {
    oracle::Gen g(51);
    for (int c = 0; c < 100; ++c) {
        const double s = g.uniform(0.1, 2.0), alpha = g.uniform(0.2, 3.0), dx0 = g.uniform(0.0, 10.0);
        const Psi psi = g.coin() ? psi_sq(s) : psi_phi(s);
        const auto t = psi.tail(dx0);
        const double cap = t.diverges ? 5.0 : 0.99 * alpha * t.value;
        const double dv0 = g.uniform(0.0, cap);
        const auto d = solve_flock_diameter(dx0, dv0, alpha, psi);
        REQUIRE(d);
        REQUIRE(*d >= dx0);
        const double p = psi.power() * s;
        const double reint = alpha * (p == 1.0 ? std::log((1.0 + *d) / (1.0 + dx0))
                                               : (std::pow(1.0 + dx0, 1.0 - p) - std::pow(1.0 + *d, 1.0 - p)) / (p - 1.0));
        REQUIRE(std::abs(reint - dv0) <= 1e-10 * std::max(dv0, 1e-300) + 1e-300);
        const auto d2 = solve_flock_diameter(dx0, 0.5 * (dv0 + cap), alpha, psi);
        REQUIRE(d2);
        REQUIRE(*d2 > *d);
    }
}

TEST_CASE("d* for a tabulated kernel matches brute-force quadrature") {
    const auto tab = InfluenceFunction::tabulated({{0.0, 1.0}, {2.0, 0.5}, {6.0, 0.1}, {10.0, 0.0}});
    const Psi psi{tab, PsiKind::PhiSquared, 1.0};
    const auto d = solve_flock_diameter(1.0, 0.8, 1.0, psi);
    REQUIRE(d);
    const double reint = oracle::simpson([&](double r) { return tab(r) * tab(r); }, 1.0, *d, 400000);
    CHECK(std::abs(reint - 0.8) <= 1e-8);
    CHECK_FALSE(solve_flock_diameter(1.0, 5.0, 1.0, psi));
}

TEST_CASE("certify examples") {
    const auto u = certify({10.0, 3.0}, model(ModelKind::RelativeInfluence, 0.25));
    CHECK(u.verdict == Verdict::Unconditional);
    CHECK(u.tail.diverges);
    REQUIRE(u.d_star);
    REQUIRE(u.predicted_rate);
    CHECK(*u.predicted_rate == doctest::Approx(std::pow(1.0 + *u.d_star, -0.5)).epsilon(1e-14));

    const auto ng = certify({0.0, 1.5}, model(ModelKind::RelativeInfluence, 1.0));
    CHECK(ng.verdict == Verdict::NotGuaranteed);
    CHECK_FALSE(ng.d_star);
    CHECK_FALSE(ng.predicted_rate);
    CHECK(ng.tail.value == doctest::Approx(1.0));

    const auto cs = certify({0.0, 0.5}, model(ModelKind::CuckerSmale, 1.0));
    CHECK(cs.verdict == Verdict::ConditionalSatisfied);
    REQUIRE(cs.d_star);
    // 1 - 1/(1 + d*) = 0.5.
    CHECK(*cs.d_star == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("leader certificate absorbs beta squared") {
    auto m = model(ModelKind::Leader, 1.0, 2.0);
    m.beta = 0.5;
    const auto c = certify({0.0, 0.4}, m);
    CHECK(c.psi_scale == 0.25);
    CHECK(c.tail.value == doctest::Approx(2.0 * 0.25));
    CHECK(c.verdict == Verdict::ConditionalSatisfied);
    CHECK(certify({0.0, 0.6}, m).verdict == Verdict::NotGuaranteed);
}

TEST_CASE("vision has no certificate") {
    CHECK_THROWS_AS(certify({1.0, 1.0}, model(ModelKind::Vision, 0.25)), std::invalid_argument);
}

TEST_CASE("certificate invariants on random inputs") {
    oracle::Gen g(52);
    for (int c = 0; c < 300; ++c) {
        const double s = g.uniform(0.1, 3.0);
        const Diameters d{g.uniform(0.0, 20.0), g.uniform(0.0, 3.0)};
        const auto m = model(g.coin() ? ModelKind::CuckerSmale : ModelKind::RelativeInfluence, s, g.uniform(0.1, 4.0));
        const auto kind = g.coin() ? PsiKind::Phi : PsiKind::PhiSquared;
        const auto cert = certify(d, m, kind);
        const int p = kind == PsiKind::Phi ? 1 : 2;
        REQUIRE((cert.verdict == Verdict::Unconditional) == (p * s <= 1.0));
        REQUIRE((cert.verdict == Verdict::Unconditional) == cert.tail.diverges);
        if (!cert.tail.diverges)
            REQUIRE((cert.verdict == Verdict::ConditionalSatisfied) == (d.d_v <= cert.tail.value));
        REQUIRE(cert.d_star.has_value() == (cert.verdict != Verdict::NotGuaranteed));
    }
}

TEST_CASE("tabulated certificate uses the grid minimum of psi") {
    const auto tab = InfluenceFunction::tabulated({{0.0, 1.0}, {1.0, 0.8}, {3.0, 0.2}, {5.0, 0.0}});
    ModelSpec m;
    m.phi = tab;
    const auto c = certify({0.5, 0.2}, m);
    REQUIRE(c.d_star);
    CHECK(*c.predicted_rate == doctest::Approx(tab(*c.d_star) * tab(*c.d_star)).epsilon(1e-9));
}

TEST_CASE("fit_exponential_rate examples") {
    std::vector<double> t, v, flat;
    for (int k = 0; k <= 100; ++k) {
        t.push_back(0.05 * k);
        v.push_back(std::exp(-2.0 * t.back()));
        flat.push_back(0.7);
    }
    CHECK(std::abs(fit_exponential_rate(t, v) - 2.0) <= 1e-9);
    CHECK(std::abs(fit_exponential_rate(t, flat)) <= 1e-12);

    auto truncated = v;
    truncated[60] = 0.0;
    CHECK(std::abs(fit_exponential_rate(t, truncated) - 2.0) <= 1e-9);
    truncated[2] = 0.0;
    CHECK_THROWS_AS(fit_exponential_rate(t, truncated), std::invalid_argument);
    CHECK_THROWS_AS(fit_exponential_rate(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0}),
                    std::invalid_argument);
}

TEST_CASE("simulated runs conform to their certificates") {
    oracle::Gen g(53);
    for (auto kind : {ModelKind::CuckerSmale, ModelKind::RelativeInfluence, ModelKind::Leader}) {
        auto m = model(kind, 0.25);
        m.beta = 0.5;
        const std::size_t n = 12;
        const AgentEnsemble e(2, g.vec(n * 2, 0.0, 4.0), g.vec(n * 2, -0.5, 0.5));
        const Diameters d0 = diameters(e);
        const auto cert = certify(d0, m);
        REQUIRE(cert.verdict == Verdict::Unconditional);
        SimulationOptions opt;
        opt.dt = 0.05;
        opt.t_end = 400.0;
        opt.stop_ratio = 1e-3;
        const auto rec = simulate(e, m, opt);
        CHECK(rec.d_v.back() <= 1e-3 * rec.d_v.front());
        for (double dx : rec.d_x)
            REQUIRE(dx <= *cert.d_star + opt.dt * d0.d_v);
        CHECK(fit_exponential_rate(rec.times, rec.d_v) >= *cert.predicted_rate);
    }
}

TEST_CASE("energy does not increase along an mt run") {
    oracle::Gen g(54);
    const AgentEnsemble e(2, g.vec(40, 0.0, 10.0), g.vec(40, -1.0, 1.0));
    const auto m = model(ModelKind::RelativeInfluence, 0.25);
    const Psi psi{m.phi, PsiKind::PhiSquared, 1.0};
    SimulationOptions opt;
    opt.dt = 0.01;
    opt.t_end = 20.0;
    const auto rec = simulate(e, m, opt);
    for (std::size_t k = 1; k < rec.samples(); ++k)
        REQUIRE(energy(rec.d_x[k], rec.d_v[k], psi, 1.0) <=
                energy(rec.d_x[k - 1], rec.d_v[k - 1], psi, 1.0) + 10.0 * opt.dt * opt.dt);
}
