#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "flock/dynamics.hpp"
#include "flock/influence.hpp"
#include "oracles.hpp"

using namespace flock;

namespace {

void require_row_stochastic(const InfluenceMatrix &m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < m.size(); ++j) {
            REQUIRE(m(i, j) >= 0.0);
            sum += m(i, j);
        }
        REQUIRE(std::abs(sum - 1.0) <= 1e-12);
    }
}

PointSet points(const std::vector<double> &x, std::size_t d) { return {d, x}; }

} // namespace

TEST_CASE("eval_influence examples") {
    const auto pl = InfluenceFunction::power_law(1.0);
    CHECK(eval_influence(pl, 0.0) == 1.0);
    CHECK(eval_influence(pl, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    const auto cut = InfluenceFunction::power_law_cutoff(1.0, 2.0);
    CHECK(eval_influence(cut, 3.0) == 0.0);
    CHECK(eval_influence(cut, 2.0) == 0.0);
    CHECK(eval_influence(cut, 1.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(eval_influence(pl, -1e-9), std::domain_error);
    CHECK_THROWS_AS(eval_influence(pl, std::nan("")), std::domain_error);
}

TEST_CASE("kernel construction rejects invalid parameters") {
    CHECK_THROWS_AS(InfluenceFunction::power_law(0.0), std::invalid_argument);
    CHECK_THROWS_AS(InfluenceFunction::power_law(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(InfluenceFunction::power_law_cutoff(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(InfluenceFunction::tabulated({}), std::invalid_argument);
    CHECK_THROWS_AS(InfluenceFunction::tabulated({{0.0, 0.9}}), std::invalid_argument);
    CHECK_THROWS_AS(InfluenceFunction::tabulated({{0.0, 1.0}, {1.0, 1.2}}), std::invalid_argument);
    CHECK_THROWS_AS(InfluenceFunction::tabulated({{0.0, 1.0}, {0.0, 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(InfluenceFunction::tabulated({{0.0, 1.0}, {1.0, -0.1}}), std::invalid_argument);
}

TEST_CASE("tabulated kernel interpolates and clamps") {
    const auto t = InfluenceFunction::tabulated({{0.0, 1.0}, {1.0, 0.5}, {3.0, 0.1}});
    CHECK(t(0.0) == 1.0);
    CHECK(t(0.5) == doctest::Approx(0.75));
    CHECK(t(2.0) == doctest::Approx(0.3));
    CHECK(t(3.0) == doctest::Approx(0.1));
    CHECK(t(3.0001) == 0.0);
    CHECK(t.support_radius() == 3.0);
}

TEST_CASE("kernel invariants over sampled radii") {
    oracle::Gen g(11);
    for (int c = 0; c < 200; ++c) {
        const double s = g.uniform(0.05, 5.0);
        const InfluenceFunction kernels[] = {
            InfluenceFunction::power_law(s),
            InfluenceFunction::power_law_cutoff(s, g.uniform(0.1, 10.0)),
            InfluenceFunction::tabulated({{0.0, 1.0}, {g.uniform(0.1, 1.0), 0.6}, {2.0, 0.2}, {4.0, 0.0}}),
        };
        for (const auto &phi : kernels) {
            REQUIRE(phi(0.0) == 1.0);
            double r1 = g.uniform(0.0, 20.0), r2 = g.uniform(0.0, 20.0);
            if (r1 > r2)
                std::swap(r1, r2);
            REQUIRE(phi(r1) >= phi(r2));
            REQUIRE(phi(r2) >= 0.0);
        }
    }
}

TEST_CASE("tail_integral examples and quadrature cross-check") {
    const auto s1 = InfluenceFunction::power_law(1.0);
    const auto t = tail_integral(s1, 2, 0.0);
    REQUIRE_FALSE(t.diverges);
    CHECK(t.value == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(t.value - oracle::tail([](double r) { return oracle::power_law(2.0, r); }, 0.0)) <= 1e-8);

    CHECK(tail_integral(InfluenceFunction::power_law(0.5), 2, 0.0).diverges);
    CHECK(tail_integral(s1, 1, 0.0).diverges);

    const auto s3 = InfluenceFunction::power_law(3.0);
    const double ref = oracle::tail([](double r) { return oracle::power_law(3.0, r); }, 2.5);
    CHECK(std::abs(tail_integral(s3, 1, 2.5).value - ref) <= 1e-8 * ref);
}

TEST_CASE("tail_integral for cutoff and tabulated kernels matches brute force") {
    const auto cut = InfluenceFunction::power_law_cutoff(0.5, 4.0);
    for (int power : {1, 2}) {
        const auto t = tail_integral(cut, power, 1.0);
        REQUIRE_FALSE(t.diverges);
        const double ref = oracle::simpson(
            [&](double r) { return std::pow(oracle::power_law(0.5, r), power); }, 1.0, 4.0);
        CHECK(std::abs(t.value - ref) <= 1e-8 * ref);
    }
    const auto tab = InfluenceFunction::tabulated({{0.0, 1.0}, {1.0, 0.5}, {3.0, 0.1}});
    for (int power : {1, 2}) {
        const auto t = tail_integral(tab, power, 0.5);
        const double ref = oracle::simpson([&](double r) { return std::pow(tab(r), power); }, 0.5, 3.0, 600000);
        CHECK(std::abs(t.value - ref) <= 1e-8);
    }
}

TEST_CASE("tail divergence criterion over a grid of s") {
    for (double s = 0.05; s <= 3.0; s += 0.05)
        for (int p : {1, 2}) {
            const auto t = tail_integral(InfluenceFunction::power_law(s), p, 0.3);
            CHECK(t.diverges == (p * s <= 1.0));
        }
    CHECK(tail_integral(InfluenceFunction::power_law(0.5), 2, 0.0).diverges);
    CHECK_FALSE(tail_integral(InfluenceFunction::power_law(0.5000001), 2, 0.0).diverges);
}

TEST_CASE("build_cs examples") {
    const auto phi = InfluenceFunction::power_law(1.0);
    const std::vector<double> one{3.0, 4.0};
    const auto m1 = build_cs(points(one, 2), phi);
    REQUIRE(m1.size() == 1);
    CHECK(m1(0, 0) == 1.0);

    const std::vector<double> x{0.0, 1.0};
    const auto m = build_cs(points(x, 1), phi);
    CHECK(m(0, 0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(m(0, 1) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(m(1, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(m(1, 1) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(m.model == ModelKind::CuckerSmale);
}

TEST_CASE("build_cs matches the direct formula and is symmetric off the diagonal") {
    oracle::Gen g(5);
    const auto phi = InfluenceFunction::power_law(0.7);
    auto ref_phi = [](double r) { return oracle::power_law(0.7, r); };
    for (int c = 0; c < 50; ++c) {
        const std::size_t d = g.index(1, 3);
        const auto x = g.vec(6 * d, -5.0, 5.0);
        const auto m = build_cs(points(x, d), phi);
        const auto ref = oracle::cs_matrix(x, d, ref_phi);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j) {
                REQUIRE(std::abs(m(i, j) - ref[i][j]) <= 1e-15);
                if (i != j)
                    REQUIRE(std::abs(m(i, j) - m(j, i)) <= 1e-15);
            }
        require_row_stochastic(m);
    }
}

TEST_CASE("build_mt examples") {
    const auto phi = InfluenceFunction::power_law(1.0);
    const std::vector<double> x{0.0, 1.0};
    const auto m = build_mt(points(x, 1), phi);
    CHECK(m(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(m(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(m(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(m(1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    const std::vector<double> same(8, 2.5);
    const auto m4 = build_mt(points(same, 2), phi);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(m4(i, j) == doctest::Approx(0.25).epsilon(1e-15));

    const std::vector<double> three{0.0, 1.0, 10.0};
    const auto a = build_mt(points(three, 1), phi);
    // Row sums of phi are 1 + 1/2 + 1/11 and 1/2 + 1 + 1/10.
    CHECK(a(0, 1) == doctest::Approx(0.5 / (1.0 + 0.5 + 1.0 / 11.0)).epsilon(1e-14));
    CHECK(a(0, 1) == doctest::Approx(0.31429).epsilon(1e-4));
    CHECK(a(1, 0) == doctest::Approx(0.3125).epsilon(1e-14));
    CHECK(a(0, 1) != doctest::Approx(a(1, 0)));

    const std::vector<double> single{7.0};
    CHECK(build_mt(points(single, 1), phi)(0, 0) == 1.0);
}

TEST_CASE("build_mt matches the direct formula and respects the lower bound") {
    oracle::Gen g(6);
    for (int c = 0; c < 60; ++c) {
        const double s = g.uniform(0.1, 3.0);
        const auto phi = InfluenceFunction::power_law(s);
        const std::size_t d = g.index(1, 3), n = g.index(1, 12);
        const auto x = g.vec(n * d, -10.0, 10.0);
        const auto m = build_mt(points(x, d), phi);
        const auto ref = oracle::mt_matrix(x, d, [s](double r) { return oracle::power_law(s, r); });
        const double bound = oracle::power_law(s, oracle::diameter(x, d)) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                REQUIRE(std::abs(m(i, j) - ref[i][j]) <= 1e-15);
                REQUIRE(m(i, j) >= bound * (1.0 - 1e-14));
            }
        require_row_stochastic(m);
    }
}

TEST_CASE("build_leader examples") {
    const auto phi = InfluenceFunction::power_law(1.0);
    const std::vector<double> x{0.0, 1.0};
    const auto m = build_leader(points(x, 1), phi, 0.5, 0);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 1) == 0.0);
    CHECK(m(1, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(m(1, 1) == doctest::Approx(0.75).epsilon(1e-15));

    CHECK_THROWS_AS(build_leader(points(x, 1), phi, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_leader(points(x, 1), phi, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_leader(points(x, 1), phi, 0.5, 2), std::invalid_argument);
}

TEST_CASE("leader row leaves the leader velocity unchanged") {
    oracle::Gen g(8);
    ModelSpec spec;
    spec.model = ModelKind::Leader;
    spec.phi = InfluenceFunction::power_law(0.5);
    spec.beta = 0.3;
    spec.leader = 2;
    AgentEnsemble e(2, g.vec(10, 0.0, 5.0), g.vec(10, -1.0, 1.0));
    const auto next = step(e, spec, 0.1, Scheme::Euler);
    CHECK(next.velocity(2)[0] == e.velocity(2)[0]);
    CHECK(next.velocity(2)[1] == e.velocity(2)[1]);
}

TEST_CASE("build_leader matches the direct formula and bounds the leader weight") {
    oracle::Gen g(9);
    for (int c = 0; c < 50; ++c) {
        const std::size_t n = g.index(2, 10), d = g.index(1, 3), p = g.index(0, n - 1);
        const double s = g.uniform(0.1, 2.0), beta = g.uniform(0.05, 0.95);
        const auto x = g.vec(n * d, 0.0, 8.0);
        const auto m = build_leader(points(x, d), InfluenceFunction::power_law(s), beta, p);
        const auto ref = oracle::leader_matrix(x, d, [s](double r) { return oracle::power_law(s, r); }, beta, p);
        const double bound = beta * oracle::power_law(s, oracle::diameter(x, d));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j)
                REQUIRE(std::abs(m(i, j) - ref[i][j]) <= 1e-15);
            if (i != p)
                REQUIRE(m(i, p) >= bound * (1.0 - 1e-14));
        }
        require_row_stochastic(m);
    }
}

TEST_CASE("vision visibility is asymmetric") {
    const auto phi = InfluenceFunction::power_law(1.0);
    const std::vector<double> x{0.0, 0.0, 1.0, 0.0};
    const std::vector<double> v{1.0, 0.0, 1.0, 0.0};
    for (auto norm : {VisionNormalization::CsStyle, VisionNormalization::MtStyle}) {
        const auto m = build_vision(points(x, 2), points(v, 2), phi, 0.0, norm);
        CHECK(m(0, 1) > 0.0);
        CHECK(m(1, 0) == 0.0);
        CHECK(m(1, 1) == 1.0);
        require_row_stochastic(m);
    }
    // cs-style: agent 0 sees itself and agent 1, N_0 = 2.
    const auto cs = build_vision(points(x, 2), points(v, 2), phi, 0.0, VisionNormalization::CsStyle);
    CHECK(cs(0, 1) == doctest::Approx(0.25));
    const auto mt = build_vision(points(x, 2), points(v, 2), phi, 0.0, VisionNormalization::MtStyle);
    CHECK(mt(0, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("vision with the full cone reproduces the base builders") {
    oracle::Gen g(10);
    for (int c = 0; c < 30; ++c) {
        const std::size_t n = g.index(1, 9), d = g.index(1, 3);
        const auto phi = InfluenceFunction::power_law(g.uniform(0.2, 2.0));
        const auto x = g.vec(n * d, -3.0, 3.0);
        auto v = g.vec(n * d, -1.0, 1.0);
        for (auto &c2 : v)
            c2 += c2 >= 0.0 ? 0.1 : -0.1;
        const auto cs = build_cs(points(x, d), phi);
        const auto mt = build_mt(points(x, d), phi);
        const auto vcs = build_vision(points(x, d), points(v, d), phi, -1.0, VisionNormalization::CsStyle);
        const auto vmt = build_vision(points(x, d), points(v, d), phi, -1.0, VisionNormalization::MtStyle);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                REQUIRE(std::abs(vcs(i, j) - cs(i, j)) <= 1e-15);
                REQUIRE(std::abs(vmt(i, j) - mt(i, j)) <= 1e-15);
            }
    }
}

TEST_CASE("vision: a zero-velocity agent sees everyone") {
    const auto phi = InfluenceFunction::power_law(1.0);
    const std::vector<double> x{0.0, 0.0, 1.0, 0.0, -2.0, 1.0};
    const std::vector<double> v{0.0, 0.0, 1.0, 0.0, 0.0, 1.0};
    const auto m = build_vision(points(x, 2), points(v, 2), phi, 0.5, VisionNormalization::MtStyle);
    const auto full = build_mt(points(x, 2), phi);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(m(0, j) == doctest::Approx(full(0, j)).epsilon(1e-15));
}

TEST_CASE("vision: an agent that sees nobody keeps its velocity") {
    const auto phi = InfluenceFunction::power_law(1.0);
    const std::vector<double> x{0.0, 1.0, 2.0};
    const std::vector<double> v{-1.0, 1.0, 1.0};
    const auto m = build_vision(points(x, 1), points(v, 1), phi, 0.0, VisionNormalization::CsStyle);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 1) == 0.0);
    CHECK(m(0, 2) == 0.0);
    CHECK(m(2, 2) == 1.0);
}

TEST_CASE("every builder is row stochastic on random inputs") {
    oracle::Gen g(12);
    for (int c = 0; c < 200; ++c) {
        const std::size_t n = g.index(1, 15), d = g.index(1, 3);
        const double s = g.uniform(0.1, 4.0);
        const InfluenceFunction phi = g.coin() ? InfluenceFunction::power_law(s)
                                               : InfluenceFunction::power_law_cutoff(s, g.uniform(0.5, 5.0));
        const auto x = g.vec(n * d, -5.0, 5.0);
        const auto v = g.vec(n * d, -1.0, 1.0);
        require_row_stochastic(build_cs(points(x, d), phi));
        require_row_stochastic(build_mt(points(x, d), phi));
        if (n >= 2)
            require_row_stochastic(build_leader(points(x, d), phi, g.uniform(0.01, 0.99), g.index(0, n - 1)));
        const double gamma = g.uniform(-1.0, 1.0);
        require_row_stochastic(build_vision(points(x, d), points(v, d), phi, gamma, VisionNormalization::CsStyle));
        require_row_stochastic(build_vision(points(x, d), points(v, d), phi, gamma, VisionNormalization::MtStyle));
    }
}

TEST_CASE("builders reject non-finite positions") {
    const auto phi = InfluenceFunction::power_law(1.0);
    const std::vector<double> x{0.0, std::nan("")};
    CHECK_THROWS_AS(build_cs(points(x, 1), phi), std::invalid_argument);
    CHECK_THROWS_AS(build_mt(points(x, 1), phi), std::invalid_argument);
    const std::vector<double> y{0.0, INFINITY};
    CHECK_THROWS_AS(build_leader(points(y, 1), phi, 0.5, 0), std::invalid_argument);
}

TEST_CASE("builders are bitwise reproducible") {
    oracle::Gen g(13);
    const auto x = g.vec(40, -4.0, 4.0);
    const auto phi = InfluenceFunction::power_law(0.8);
    const auto a = build_mt(points(x, 2), phi), b = build_mt(points(x, 2), phi);
    CHECK(a.entries.data() == b.entries.data());
}
