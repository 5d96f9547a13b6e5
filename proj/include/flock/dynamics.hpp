#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "flock/influence.hpp"

namespace flock {

/// Positions and velocities of N agents in dim dimensions at time t.
/// Coordinates are stored agent-major: agent i occupies [i*dim, (i+1)*dim).
struct AgentEnsemble {
    double t{0.0};
    std::size_t dim{1};
    std::vector<double> x;
    std::vector<double> v;

    AgentEnsemble() = default;
    AgentEnsemble(std::size_t dim, std::vector<double> positions, std::vector<double> velocities,
                  double t = 0.0);

    std::size_t size() const { return dim == 0 ? 0 : x.size() / dim; }
    std::span<const double> position(std::size_t i) const { return {x.data() + i * dim, dim}; }
    std::span<const double> velocity(std::size_t i) const { return {v.data() + i * dim, dim}; }
    PointSet positions() const { return {dim, x}; }
    PointSet velocities() const { return {dim, v}; }

    /// Throws std::invalid_argument unless N >= 1, dim in {1,2,3}, shapes agree
    /// and every coordinate is finite.
    void validate() const;
};

struct ModelSpec {
    ModelKind model{ModelKind::RelativeInfluence};
    InfluenceFunction phi{InfluenceFunction::power_law(1.0)};
    double alpha{1.0};
    double beta{0.5};           // leader model
    std::size_t leader{0};      // leader model, 0-based
    double gamma{0.0};          // vision model
    VisionNormalization normalization{VisionNormalization::MtStyle};

    void validate() const;
    bool operator==(const ModelSpec &) const = default;
};

enum class Scheme { Euler, Rk4 };

InfluenceMatrix build_matrix(const AgentEnsemble &ensemble, const ModelSpec &model);

/// Accelerations alpha * sum_j a_ij (v_j - v_i), flattened like AgentEnsemble::v.
std::vector<double> rhs(const AgentEnsemble &ensemble, const ModelSpec &model);
std::vector<double> rhs(const AgentEnsemble &ensemble, const InfluenceMatrix &matrix, double alpha);

AgentEnsemble step(const AgentEnsemble &ensemble, const ModelSpec &model, double dt, Scheme scheme);

struct Diameters {
    double d_x{0.0};
    double d_v{0.0};
};

Diameters diameters(const AgentEnsemble &ensemble);
double diameter(PointSet points);

std::vector<double> bulk_momentum(const AgentEnsemble &ensemble);

/// Per-step callback: state before the step, the influence matrix at the
/// start of the step and the state after it.
struct StepEvent {
    const AgentEnsemble &before;
    const InfluenceMatrix &matrix;
    const AgentEnsemble &after;
};

struct SimulationOptions {
    double dt{0.01};
    double t_end{1.0};
    Scheme scheme{Scheme::Euler};
    std::size_t snapshot_stride{0}; // 0 disables snapshots
    /// Stop once d_V(t) <= stop_ratio * d_V(0); 0 disables the early exit.
    double stop_ratio{0.0};
    std::function<void(const StepEvent &)> observer;
    /// Extra stopping rule evaluated after every step.
    std::function<bool(const AgentEnsemble &)> stop_when;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> d_x;
    std::vector<double> d_v;
    std::vector<std::vector<double>> momentum;
    std::vector<AgentEnsemble> snapshots;
    AgentEnsemble final_state;

    std::size_t samples() const { return times.size(); }
};

TrajectoryRecord simulate(const AgentEnsemble &initial, const ModelSpec &model,
                          const SimulationOptions &options);

// ----------------------------------------------------------------------------
// Empirical measure

struct DensityGrid {
    std::size_t dim{1};                 // 1 or 2
    std::vector<double> origin;         // lower corner per axis
    std::vector<double> cell;           // cell width per axis
    std::vector<std::size_t> cells;     // cell count per axis

    double cell_volume() const;
    std::size_t total_cells() const;
    double center(std::size_t axis, std::size_t index) const;
};

struct DepositMode {
    enum class Kind { Histogram, Gaussian } kind{Kind::Histogram};
    double bandwidth{0.0};
};

enum class GridPolicy { Strict, Extend };

struct DensityField {
    DensityGrid grid;
    std::vector<double> values; // row-major, last axis fastest

    double integral() const;
};

DensityField empirical_density(const AgentEnsemble &ensemble, DensityGrid grid, DepositMode mode,
                               GridPolicy policy = GridPolicy::Extend);

/// Evaluates the kinetic vector field on the empirical measure at each agent
/// and returns the largest Euclidean deviation from the relative-influence
/// right-hand side.
double kinetic_consistency_check(const AgentEnsemble &ensemble, const InfluenceFunction &phi,
                                 double alpha);

} // namespace flock
