#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "flock/activeset.hpp"
#include "flock/dynamics.hpp"
#include "oracles.hpp"

using namespace flock;

namespace {

InfluenceMatrix from_rows(const oracle::Mat &rows) {
    InfluenceMatrix m;
    m.entries = SquareMatrix(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.size(); ++j)
            m.entries(i, j) = rows[i][j];
    return m;
}

SquareMatrix square(const oracle::Mat &rows) { return from_rows(rows).entries; }

bool subset(const std::vector<std::size_t> &a, const std::vector<std::size_t> &b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

std::vector<std::size_t> intersect(const std::vector<std::size_t> &a, const std::vector<std::size_t> &b) {
    std::vector<std::size_t> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

ModelSpec mt_model(double s) {
    ModelSpec m;
    m.model = ModelKind::RelativeInfluence;
    m.phi = InfluenceFunction::power_law(s);
    return m;
}

} // namespace

TEST_CASE("active sets at the minimum entry include everyone") {
    oracle::Gen g(41);
    for (int c = 0; c < 30; ++c) {
        const std::size_t n = g.index(1, 10);
        const auto x = g.vec(n * 2, 0.0, 5.0);
        const auto m = build_mt({2, x}, InfluenceFunction::power_law(1.0));
        const auto rep = active_sets(m, m.min_entry());
        CHECK(rep.global_count() == n);
        CHECK(rep.pairwise_min == n);
        const auto none = active_sets(m, m.max_entry() * 1.0001);
        CHECK(none.global_count() == 0);
        CHECK(none.pairwise_min == 0);
        for (const auto &p : none.per_agent)
            CHECK(p.empty());
    }
}

TEST_CASE("hand matrix with two overlapping active sets") {
    const auto m = from_rows({{0.3, 0.3, 0.3, 0.1},
                              {0.25, 0.25, 0.25, 0.25},
                              {0.25, 0.25, 0.25, 0.25},
                              {0.1, 0.3, 0.3, 0.3}});
    const auto rep = active_sets(m, 0.2);
    CHECK(rep.per_agent[0] == std::vector<std::size_t>{0, 1, 2});
    CHECK(rep.per_agent[3] == std::vector<std::size_t>{1, 2, 3});
    CHECK(pairwise_count(m, 0.2, 0, 3) == 2);
    CHECK(intersect(rep.per_agent[0], rep.per_agent[3]) == std::vector<std::size_t>{1, 2});
    CHECK(rep.global == std::vector<std::size_t>{1, 2});
    CHECK(rep.pairwise_min == 2);
    CHECK_THROWS_AS(active_sets(m, 0.0), std::invalid_argument);
}

TEST_CASE("active set inclusions, monotonicity and lambda theta <= 1") {
    oracle::Gen g(42);
    for (int c = 0; c < 100; ++c) {
        const std::size_t n = g.index(1, 12), d = g.index(1, 3);
        const auto x = g.vec(n * d, 0.0, 6.0);
        const auto v = g.vec(n * d, -1.0, 1.0);
        const auto phi = InfluenceFunction::power_law(g.uniform(0.2, 3.0));
        InfluenceMatrix m;
        switch (c % 4) {
        case 0:
            m = build_cs({d, x}, phi);
            break;
        case 1:
            m = build_mt({d, x}, phi);
            break;
        case 2:
            m = n >= 2 ? build_leader({d, x}, phi, 0.4, 0) : build_mt({d, x}, phi);
            break;
        default:
            m = build_vision({d, x}, {d, v}, phi, g.uniform(-1.0, 1.0), VisionNormalization::CsStyle);
        }
        const double t1 = g.uniform(1e-3, 0.5), t2 = t1 * g.uniform(1.0, 3.0);
        const auto r1 = active_sets(m, t1), r2 = active_sets(m, t2);
        std::size_t min_pq = n;
        for (std::size_t p = 0; p < n; ++p) {
            REQUIRE(subset(r2.per_agent[p], r1.per_agent[p]));
            for (std::size_t q = 0; q < n; ++q) {
                const auto pq = intersect(r1.per_agent[p], r1.per_agent[q]);
                REQUIRE(subset(r1.global, pq));
                REQUIRE(subset(pq, r1.per_agent[p]));
                REQUIRE(pairwise_count(m, t1, p, q) == pq.size());
                if (p != q || n == 1)
                    min_pq = std::min(min_pq, pq.size());
            }
        }
        REQUIRE(r1.pairwise_min == min_pq);
        REQUIRE(r1.global_count() <= r1.pairwise_min);
        REQUIRE(static_cast<double>(r1.global_count()) * t1 <= 1.0 + 1e-12);
        REQUIRE(static_cast<double>(r1.pairwise_min) * t1 <= 1.0 + 1e-12);
    }
}

TEST_CASE("lemma examples") {
    const SquareMatrix zero(4);
    const std::vector<double> u{0.1, 0.2, 0.3, 0.4}, w{1.0, 0.0, 2.0, 0.5};
    for (double theta : {1e-3, 0.1, 0.25, 1.0}) {
        const auto chk = lemma_action_bound(zero, u, w, theta);
        CHECK(chk.lhs == 0.0);
        CHECK(chk.holds);
    }

    oracle::Gen g(43);
    const auto s = square(g.antisymmetric(4));
    const std::vector<double> flat(4, 0.7);
    const auto tight = lemma_action_bound(s, flat, flat, 0.25);
    CHECK(tight.lhs <= 1e-15);
    CHECK(tight.active == 4);
    CHECK(std::abs(tight.rhs) <= 1e-15);
    CHECK(tight.holds);
}

TEST_CASE("lemma input validation") {
    SquareMatrix s(2);
    s(0, 1) = 1.0;
    s(1, 0) = -0.5;
    const std::vector<double> u{1.0, 1.0};
    CHECK_THROWS_AS(lemma_action_bound(s, u, u, 0.1), std::invalid_argument);
    s(1, 0) = -1.0;
    CHECK_NOTHROW(lemma_action_bound(s, u, u, 0.1));
    const std::vector<double> neg{1.0, -0.1};
    CHECK_THROWS_AS(lemma_action_bound(s, neg, u, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(lemma_action_bound(s, u, u, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(lemma_action_bound(s, std::vector<double>{1.0}, u, 0.1), std::invalid_argument);
}

TEST_CASE("lemma fuzz against direct evaluation") {
    oracle::Gen g(44);
    for (int c = 0; c < 1000; ++c) {
        const std::size_t n = g.index(1, 8);
        const auto s = g.antisymmetric(n);
        const auto u = g.vec(n, 0.0, 1.0), w = g.vec(n, 0.0, 1.0);
        const double theta = g.uniform(1e-4, 1.5 / static_cast<double>(n));
        const auto chk = lemma_action_bound(square(s), u, w, theta);

        double action = 0.0, m = 0.0, su = 0.0, sw = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            su += u[i];
            sw += w[i];
            for (std::size_t j = 0; j < n; ++j) {
                action += w[i] * s[i][j] * u[j];
                m = std::max(m, std::abs(s[i][j]));
            }
        }
        std::size_t lambda = 0;
        for (std::size_t j = 0; j < n; ++j)
            lambda += (u[j] >= theta * su && w[j] >= theta * sw) ? 1 : 0;
        const double rhs = m * su * sw * (1.0 - std::pow(static_cast<double>(lambda) * theta, 2));
        REQUIRE(chk.active == lambda);
        REQUIRE(std::abs(chk.lhs - std::abs(action)) <= 1e-13);
        REQUIRE(std::abs(chk.rhs - rhs) <= 1e-13);
        REQUIRE(chk.holds);
        REQUIRE(chk.slack() >= -1e-12);
    }
}

TEST_CASE("default theta schedules") {
    const AgentEnsemble e(1, {0.0, 1.0, 3.0}, {0.0, 1.0, 0.5});
    auto mt = mt_model(1.0);
    const auto m = build_matrix(e, mt);
    CHECK(default_schedule(mt)(e, m) == doctest::Approx(0.25 / 3.0));
    ModelSpec leader = mt;
    leader.model = ModelKind::Leader;
    leader.beta = 0.4;
    CHECK(default_schedule(leader)(e, m) == doctest::Approx(0.1));
    ModelSpec vision = mt;
    vision.model = ModelKind::Vision;
    CHECK(default_schedule(vision)(e, m) == m.min_entry());
}

TEST_CASE("decay check on an equal-velocity trajectory") {
    const AgentEnsemble e(2, {0, 0, 1, 0, 0, 3}, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    SimulationOptions opt;
    opt.dt = 0.1;
    opt.t_end = 1.0;
    opt.snapshot_stride = 1;
    const auto mt = mt_model(1.0);
    const auto rec = simulate(e, mt, opt);
    const auto rep = verify_diameter_decay(rec, mt, default_schedule(mt));
    CHECK(rep.pass);
    CHECK(rep.steps.size() == 10);
    for (const auto &st : rep.steps) {
        CHECK(st.d_v_before == 0.0);
        CHECK(st.d_v_after == 0.0);
    }
}

TEST_CASE("decay check on the two-agent example") {
    const AgentEnsemble e(1, {0.0, 1.0}, {0.0, 1.0});
    const auto mt = mt_model(1.0);
    const double dt = 0.01;
    const auto next = step(e, mt, dt, Scheme::Euler);
    DecayMonitor mon(1.0, default_schedule(mt));
    mon.observe(e, build_matrix(e, mt), next);
    const auto &st = mon.last();
    CHECK(st.theta == doctest::Approx(0.25));
    CHECK(st.lambda_global == 2);
    CHECK(st.lambda_pairwise == 2);
    // Measured contraction is 1 - (2/3) dt, at least the guaranteed 1 - phi(1)^2 dt.
    CHECK(st.d_v_after == doctest::Approx(1.0 - 2.0 / 3.0 * dt).epsilon(1e-14));
    const double rate = (1.0 - st.d_v_after) / dt;
    CHECK(rate >= 0.25);
    CHECK(st.margin_global >= 0.0);
    CHECK(mon.report().pass);
}

TEST_CASE("decay check passes on cs and mt runs") {
    oracle::Gen g(45);
    for (auto kind : {ModelKind::CuckerSmale, ModelKind::RelativeInfluence}) {
        for (int c = 0; c < 3; ++c) {
            ModelSpec m = mt_model(g.uniform(0.2, 1.5));
            m.model = kind;
            const std::size_t n = kind == ModelKind::CuckerSmale ? 3 : 10;
            const AgentEnsemble e(2, g.vec(n * 2, 0.0, 5.0), g.vec(n * 2, -1.0, 1.0));
            SimulationOptions opt;
            opt.dt = 0.02;
            opt.t_end = 10.0;
            opt.snapshot_stride = 1;
            const auto rec = simulate(e, m, opt);
            const auto rep = verify_diameter_decay(rec, m, default_schedule(m));
            CHECK(rep.pass);
            CHECK(rep.worst_margin >= 0.0);
            CHECK(rep.worst_pairwise_margin >= 0.0);
        }
    }
}

TEST_CASE("decay check needs every snapshot") {
    const AgentEnsemble e(1, {0.0, 1.0}, {0.0, 1.0});
    SimulationOptions opt;
    opt.dt = 0.1;
    opt.t_end = 1.0;
    const auto mt = mt_model(1.0);
    CHECK_THROWS_AS(verify_diameter_decay(simulate(e, mt, opt), mt, default_schedule(mt)), std::invalid_argument);
    opt.snapshot_stride = 2;
    CHECK_THROWS_AS(verify_diameter_decay(simulate(e, mt, opt), mt, default_schedule(mt)), std::invalid_argument);
}
