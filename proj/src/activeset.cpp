#include "flock/activeset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace flock {

namespace {

using Bits = std::vector<std::uint64_t>;

Bits row_bits(const InfluenceMatrix &m, std::size_t p, double theta) {
    const std::size_t n = m.size();
    Bits bits((n + 63) / 64, 0);
    for (std::size_t j = 0; j < n; ++j)
        if (m(p, j) >= theta)
            bits[j / 64] |= std::uint64_t{1} << (j % 64);
    return bits;
}

std::size_t and_count(const Bits &a, const Bits &b) {
    std::size_t c = 0;
    for (std::size_t k = 0; k < a.size(); ++k)
        c += static_cast<std::size_t>(std::popcount(a[k] & b[k]));
    return c;
}

std::size_t min_pairwise(const std::vector<Bits> &rows) {
    const std::size_t n = rows.size();
    if (n == 1)
        return and_count(rows[0], rows[0]);
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t p = 0; p < n && best > 0; ++p)
        for (std::size_t q = p + 1; q < n; ++q)
            best = std::min(best, and_count(rows[p], rows[q]));
    return best;
}

} // namespace

ActiveSetReport active_sets(const InfluenceMatrix &matrix, double theta) {
    if (!(theta > 0.0))
        throw std::invalid_argument("active set level theta must be positive");
    const std::size_t n = matrix.size();
    ActiveSetReport rep;
    rep.theta = theta;
    rep.per_agent.resize(n);
    std::vector<Bits> rows;
    rows.reserve(n);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t j = 0; j < n; ++j)
            if (matrix(p, j) >= theta)
                rep.per_agent[p].push_back(j);
        rows.push_back(row_bits(matrix, p, theta));
    }
    for (std::size_t j = 0; j < n; ++j) {
        bool everywhere = true;
        for (std::size_t p = 0; p < n && everywhere; ++p)
            everywhere = matrix(p, j) >= theta;
        if (everywhere)
            rep.global.push_back(j);
    }
    rep.pairwise_min = n == 0 ? 0 : min_pairwise(rows);
    return rep;
}

std::size_t pairwise_count(const InfluenceMatrix &matrix, double theta, std::size_t p, std::size_t q) {
    return and_count(row_bits(matrix, p, theta), row_bits(matrix, q, theta));
}

LemmaCheck lemma_action_bound(const SquareMatrix &s, std::span<const double> u,
                              std::span<const double> w, double theta) {
    const std::size_t n = s.size();
    if (u.size() != n || w.size() != n)
        throw std::invalid_argument("lemma_action_bound: vector sizes must match the matrix");
    if (!(theta > 0.0))
        throw std::invalid_argument("lemma_action_bound: theta must be positive");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(u[i] >= 0.0) || !(w[i] >= 0.0))
            throw std::invalid_argument("lemma_action_bound: u and w must be entrywise non-negative");
        for (std::size_t j = i; j < n; ++j)
            if (std::abs(s(i, j) + s(j, i)) > 1e-12)
                throw std::invalid_argument("lemma_action_bound: S is not antisymmetric");
    }

    double u_total = 0.0, w_total = 0.0, m = 0.0, action = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        u_total += u[i];
        w_total += w[i];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            m = std::max(m, std::abs(s(i, j)));
            action += s(i, j) * u[j] * w[i];
        }
    // <Su, w> = sum_i w_i (S u)_i.
    std::size_t active = 0;
    for (std::size_t j = 0; j < n; ++j)
        if (u[j] >= theta * u_total && w[j] >= theta * w_total)
            ++active;

    LemmaCheck out;
    out.lhs = std::abs(action);
    const double lt = static_cast<double>(active) * theta;
    out.rhs = m * u_total * w_total * (1.0 - lt * lt);
    out.active = active;
    out.max_entry = m;
    out.holds = out.lhs <= out.rhs + 1e-12;
    return out;
}

// ----------------------------------------------------------------------------

ThetaSchedule relative_lower_bound(InfluenceFunction phi) {
    return [phi = std::move(phi)](const AgentEnsemble &s, const InfluenceMatrix &) {
        return phi(diameter(s.positions())) / static_cast<double>(s.size());
    };
}

ThetaSchedule leader_lower_bound(InfluenceFunction phi, double beta) {
    return [phi = std::move(phi), beta](const AgentEnsemble &s, const InfluenceMatrix &) {
        return beta * phi(diameter(s.positions()));
    };
}

ThetaSchedule matrix_minimum() {
    return [](const AgentEnsemble &, const InfluenceMatrix &m) { return m.min_entry(); };
}

ThetaSchedule default_schedule(const ModelSpec &model) {
    switch (model.model) {
    case ModelKind::CuckerSmale:
    case ModelKind::RelativeInfluence:
        return relative_lower_bound(model.phi);
    case ModelKind::Leader:
        return leader_lower_bound(model.phi, model.beta);
    case ModelKind::Vision:
        return matrix_minimum();
    }
    return matrix_minimum();
}

DecayMonitor::DecayMonitor(double alpha, ThetaSchedule schedule, double slack_coefficient,
                           bool pairwise)
    : alpha_(alpha), schedule_(std::move(schedule)), slack_(slack_coefficient), pairwise_(pairwise) {}

void DecayMonitor::observe(const AgentEnsemble &before, const InfluenceMatrix &matrix,
                           const AgentEnsemble &after) {
    DecayStep st;
    st.t = before.t;
    st.dt = after.t - before.t;
    st.theta = schedule_(before, matrix);
    st.d_v_before = diameter(before.velocities());
    st.d_v_after = diameter(after.velocities());

    auto margin = [&](std::size_t lambda) {
        const double lt = static_cast<double>(lambda) * st.theta;
        const double bound = st.d_v_before * (1.0 - alpha_ * lt * lt * st.dt) + slack_ * st.dt * st.dt;
        return bound - st.d_v_after;
    };

    // theta <= 0 admits every entry (lambda = N) but contributes nothing.
    if (st.theta > 0.0) {
        const auto rep = active_sets(matrix, st.theta);
        st.lambda_global = rep.global_count();
        st.lambda_pairwise = pairwise_ ? rep.pairwise_min : rep.global_count();
    } else {
        st.theta = 0.0;
        st.lambda_global = st.lambda_pairwise = matrix.size();
    }
    st.margin_global = margin(st.lambda_global);
    st.margin_pairwise = margin(st.lambda_pairwise);

    auto &r = report_;
    if (r.steps.empty() || st.margin_global < r.worst_margin) {
        r.worst_margin = st.margin_global;
        r.worst_step = r.steps.size();
    }
    if (r.steps.empty() || st.margin_pairwise < r.worst_pairwise_margin)
        r.worst_pairwise_margin = st.margin_pairwise;
    r.pass = r.pass && st.margin_global >= 0.0 && st.margin_pairwise >= 0.0;
    r.steps.push_back(st);
}

DecayReport verify_diameter_decay(std::span<const AgentEnsemble> states,
                                  std::span<const InfluenceMatrix> matrices, double alpha,
                                  const ThetaSchedule &schedule) {
    if (states.size() < 2 || matrices.size() + 1 < states.size())
        throw std::invalid_argument("verify_diameter_decay: missing state or matrix snapshots");
    DecayMonitor monitor(alpha, schedule);
    for (std::size_t k = 0; k + 1 < states.size(); ++k)
        monitor.observe(states[k], matrices[k], states[k + 1]);
    return monitor.report();
}

DecayReport verify_diameter_decay(const TrajectoryRecord &trajectory, const ModelSpec &model,
                                  const ThetaSchedule &schedule) {
    if (trajectory.snapshots.size() != trajectory.samples() || trajectory.samples() < 2)
        throw std::invalid_argument(
            "verify_diameter_decay: trajectory needs a state snapshot at every step");
    std::vector<InfluenceMatrix> matrices;
    matrices.reserve(trajectory.snapshots.size());
    for (const auto &s : trajectory.snapshots)
        matrices.push_back(build_matrix(s, model));
    return verify_diameter_decay(trajectory.snapshots, matrices, model.alpha, schedule);
}

} // namespace flock
