#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "flock/dynamics.hpp"
#include "flock/influence.hpp"

namespace flock {

/// Active sets of an influence matrix at level theta. Agent indices are 0-based.
struct ActiveSetReport {
    double theta{0.0};
    std::vector<std::vector<std::size_t>> per_agent; // Lambda_p(theta), sorted
    std::size_t pairwise_min{0};                     // min_{p,q} |Lambda_pq(theta)|
    std::vector<std::size_t> global;                 // Lambda(theta), sorted

    std::size_t global_count() const { return global.size(); }
};

ActiveSetReport active_sets(const InfluenceMatrix &matrix, double theta);

/// Size of Lambda_p(theta) and Lambda_q(theta) intersection.
std::size_t pairwise_count(const InfluenceMatrix &matrix, double theta, std::size_t p, std::size_t q);

struct LemmaCheck {
    double lhs{0.0};            // |<S u, w>|
    double rhs{0.0};            // M * U * W * (1 - lambda^2 theta^2)
    std::size_t active{0};      // lambda(theta)
    double max_entry{0.0};      // M
    bool holds{false};

    double slack() const { return rhs - lhs; }
};

/// Bound on the action of an antisymmetric matrix restricted by the number of
/// jointly active entries of u and w. Throws std::invalid_argument when S is
/// not antisymmetric within 1e-12 or u, w have negative entries.
LemmaCheck lemma_action_bound(const SquareMatrix &s, std::span<const double> u,
                              std::span<const double> w, double theta);

// ----------------------------------------------------------------------------
// Discrete-time diameter decay check

/// Level theta(t) chosen from the state and the matrix in force at time t.
using ThetaSchedule = std::function<double(const AgentEnsemble &, const InfluenceMatrix &)>;

/// theta = phi(d_X) / N: every entry of an MT or CS matrix reaches this level.
ThetaSchedule relative_lower_bound(InfluenceFunction phi);
/// theta = beta * phi(d_X): the leader column reaches this level in every row.
ThetaSchedule leader_lower_bound(InfluenceFunction phi, double beta);
/// theta = min_ij a_ij.
ThetaSchedule matrix_minimum();
/// Schedule used in the flocking proofs for the given model; vision falls back
/// to matrix_minimum.
ThetaSchedule default_schedule(const ModelSpec &model);

struct DecayStep {
    double t{0.0};
    double dt{0.0};
    double theta{0.0};
    std::size_t lambda_global{0};
    std::size_t lambda_pairwise{0};
    double d_v_before{0.0};
    double d_v_after{0.0};
    double margin_global{0.0};   // bound - measured, global active set
    double margin_pairwise{0.0}; // bound - measured, pairwise minimum
};

struct DecayReport {
    std::vector<DecayStep> steps;
    std::size_t worst_step{0};
    double worst_margin{0.0};
    double worst_pairwise_margin{0.0};
    bool pass{true};
};

/// Streaming checker for
///   d_V(t+dt) <= d_V(t) (1 - alpha lambda^2 theta^2 dt) + slack * dt^2
/// with lambda taken from the global active set and, separately, from the
/// pairwise minimum. Feed it through SimulationOptions::observer.
class DecayMonitor {
  public:
    DecayMonitor(double alpha, ThetaSchedule schedule, double slack_coefficient = 10.0,
                 bool pairwise = true);

    void observe(const AgentEnsemble &before, const InfluenceMatrix &matrix,
                 const AgentEnsemble &after);
    void operator()(const StepEvent &e) { observe(e.before, e.matrix, e.after); }

    const DecayReport &report() const { return report_; }
    const DecayStep &last() const { return report_.steps.back(); }

  private:
    double alpha_;
    ThetaSchedule schedule_;
    double slack_;
    bool pairwise_;
    DecayReport report_;
};

/// Post-hoc form: states[k] and matrices[k] describe the start of step k,
/// states[k+1] its end.
DecayReport verify_diameter_decay(std::span<const AgentEnsemble> states,
                                  std::span<const InfluenceMatrix> matrices, double alpha,
                                  const ThetaSchedule &schedule);

/// Same check on a recorded trajectory; the matrices are rebuilt from the state
/// snapshots, which must have been taken at every step (snapshot_stride = 1).
DecayReport verify_diameter_decay(const TrajectoryRecord &trajectory, const ModelSpec &model,
                                  const ThetaSchedule &schedule);

} // namespace flock
