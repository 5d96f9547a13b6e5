#include "flock/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "flock/errors.hpp"

namespace flock {

namespace {

// Slack on the alpha*dt <= 1 guard so that alpha*dt == 1 computed in floating
// point is accepted.
constexpr double kEulerGuardSlack = 1e-12;

constexpr double kGaussianTruncation = 6.0; // kernel support in bandwidths

void require_finite(const std::vector<double> &values, const char *what) {
    for (double c : values)
        if (!std::isfinite(c))
            throw NumericError(std::string("non-finite ") + what + " after step");
}

// y + h * k for flattened state vectors.
std::vector<double> axpy(const std::vector<double> &y, double h, const std::vector<double> &k) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        out[i] = y[i] + h * k[i];
    return out;
}

AgentEnsemble advance(const AgentEnsemble &s, const ModelSpec &model, const InfluenceMatrix &m0,
                      double dt, Scheme scheme) {
    AgentEnsemble next;
    next.dim = s.dim;
    next.t = s.t + dt;
    if (scheme == Scheme::Euler) {
        const auto acc = rhs(s, m0, model.alpha);
        next.x = axpy(s.x, dt, s.v);
        next.v = axpy(s.v, dt, acc);
    } else {
        // Classical RK4 on (x, v); the influence matrix is rebuilt per stage.
        const auto a1 = rhs(s, m0, model.alpha);
        const auto &k1x = s.v;

        AgentEnsemble s2(s.dim, axpy(s.x, 0.5 * dt, k1x), axpy(s.v, 0.5 * dt, a1), s.t + 0.5 * dt);
        const auto a2 = rhs(s2, model);
        const auto &k2x = s2.v;

        AgentEnsemble s3(s.dim, axpy(s.x, 0.5 * dt, k2x), axpy(s.v, 0.5 * dt, a2), s.t + 0.5 * dt);
        const auto a3 = rhs(s3, model);
        const auto &k3x = s3.v;

        AgentEnsemble s4(s.dim, axpy(s.x, dt, k3x), axpy(s.v, dt, a3), s.t + dt);
        const auto a4 = rhs(s4, model);
        const auto &k4x = s4.v;

        next.x.resize(s.x.size());
        next.v.resize(s.v.size());
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            next.x[i] = s.x[i] + dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            next.v[i] = s.v[i] + dt / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
        }
    }
    require_finite(next.x, "positions");
    require_finite(next.v, "velocities");
    return next;
}

void check_step_size(const ModelSpec &model, double dt, Scheme scheme) {
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw std::invalid_argument("time step dt must be positive");
    if (scheme == Scheme::Euler && model.alpha * dt > 1.0 + kEulerGuardSlack)
        throw StabilityError("explicit Euler requires alpha*dt <= 1 (got " +
                             std::to_string(model.alpha * dt) + ")");
}

} // namespace

AgentEnsemble::AgentEnsemble(std::size_t dim, std::vector<double> positions,
                             std::vector<double> velocities, double t)
    : t(t), dim(dim), x(std::move(positions)), v(std::move(velocities)) {}

void AgentEnsemble::validate() const {
    if (dim < 1 || dim > 3)
        throw std::invalid_argument("ensemble dimension must be 1, 2 or 3");
    if (x.empty() || x.size() % dim != 0)
        throw std::invalid_argument("ensemble needs N >= 1 agents with dim coordinates each");
    if (v.size() != x.size())
        throw std::invalid_argument("positions and velocities have different lengths");
    for (double c : x)
        if (!std::isfinite(c))
            throw std::invalid_argument("non-finite position coordinate");
    for (double c : v)
        if (!std::isfinite(c))
            throw std::invalid_argument("non-finite velocity coordinate");
}

void ModelSpec::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("alpha must be positive");
    if (model == ModelKind::Leader && !(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("beta must lie in (0, 1)");
    if (model == ModelKind::Vision && !(gamma >= -1.0 && gamma <= 1.0))
        throw std::invalid_argument("gamma must lie in [-1, 1]");
}

InfluenceMatrix build_matrix(const AgentEnsemble &ensemble, const ModelSpec &model) {
    switch (model.model) {
    case ModelKind::CuckerSmale:
        return build_cs(ensemble.positions(), model.phi);
    case ModelKind::RelativeInfluence:
        return build_mt(ensemble.positions(), model.phi);
    case ModelKind::Leader:
        return build_leader(ensemble.positions(), model.phi, model.beta, model.leader);
    case ModelKind::Vision:
        return build_vision(ensemble.positions(), ensemble.velocities(), model.phi, model.gamma,
                            model.normalization);
    }
    throw std::invalid_argument("unknown model kind");
}

std::vector<double> rhs(const AgentEnsemble &ensemble, const InfluenceMatrix &matrix, double alpha) {
    const std::size_t n = ensemble.size(), d = ensemble.dim;
    if (matrix.size() != n)
        throw std::invalid_argument("influence matrix does not match ensemble size");
    std::vector<double> acc(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto vi = ensemble.velocity(i);
        double *ai = acc.data() + i * d;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            const double w = matrix(i, j);
            if (w == 0.0)
                continue;
            auto vj = ensemble.velocity(j);
            for (std::size_t k = 0; k < d; ++k)
                ai[k] += w * (vj[k] - vi[k]);
        }
        for (std::size_t k = 0; k < d; ++k)
            ai[k] *= alpha;
    }
    return acc;
}

std::vector<double> rhs(const AgentEnsemble &ensemble, const ModelSpec &model) {
    return rhs(ensemble, build_matrix(ensemble, model), model.alpha);
}

AgentEnsemble step(const AgentEnsemble &ensemble, const ModelSpec &model, double dt, Scheme scheme) {
    check_step_size(model, dt, scheme);
    return advance(ensemble, model, build_matrix(ensemble, model), dt, scheme);
}

double diameter(PointSet points) {
    const std::size_t n = points.count();
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            best = std::max(best, distance(points.point(i), points.point(j)));
    return best;
}

Diameters diameters(const AgentEnsemble &ensemble) {
    return {diameter(ensemble.positions()), diameter(ensemble.velocities())};
}

std::vector<double> bulk_momentum(const AgentEnsemble &ensemble) {
    const std::size_t n = ensemble.size(), d = ensemble.dim;
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k)
            mean[k] += ensemble.v[i * d + k];
    for (double &m : mean)
        m /= static_cast<double>(n);
    return mean;
}

TrajectoryRecord simulate(const AgentEnsemble &initial, const ModelSpec &model,
                          const SimulationOptions &options) {
    initial.validate();
    model.validate();
    if (!(options.t_end > 0.0))
        throw std::invalid_argument("simulation horizon T must be positive");
    check_step_size(model, options.dt, options.scheme);

    const auto steps = static_cast<std::size_t>(std::llround(options.t_end / options.dt));
    TrajectoryRecord rec;
    auto record = [&](const AgentEnsemble &s) {
        const auto dia = diameters(s);
        rec.times.push_back(s.t);
        rec.d_x.push_back(dia.d_x);
        rec.d_v.push_back(dia.d_v);
        rec.momentum.push_back(bulk_momentum(s));
    };

    AgentEnsemble state = initial;
    record(state);
    if (options.snapshot_stride > 0)
        rec.snapshots.push_back(state);
    const double d_v0 = rec.d_v.front();

    for (std::size_t k = 0; k < steps; ++k) {
        const InfluenceMatrix m = build_matrix(state, model);
        AgentEnsemble next = advance(state, model, m, options.dt, options.scheme);
        // Times are k*dt from the start to avoid drift from repeated addition.
        next.t = initial.t + static_cast<double>(k + 1) * options.dt;
        if (options.observer)
            options.observer(StepEvent{state, m, next});
        state = std::move(next);
        record(state);
        if (options.snapshot_stride > 0 && (k + 1) % options.snapshot_stride == 0)
            rec.snapshots.push_back(state);
        if (options.stop_ratio > 0.0 && rec.d_v.back() <= options.stop_ratio * d_v0)
            break;
        if (options.stop_when && options.stop_when(state))
            break;
    }
    rec.final_state = std::move(state);
    return rec;
}

// ----------------------------------------------------------------------------

double DensityGrid::cell_volume() const {
    double vol = 1.0;
    for (double c : cell)
        vol *= c;
    return vol;
}

std::size_t DensityGrid::total_cells() const {
    std::size_t total = 1;
    for (auto c : cells)
        total *= c;
    return total;
}

double DensityGrid::center(std::size_t axis, std::size_t index) const {
    return origin[axis] + (static_cast<double>(index) + 0.5) * cell[axis];
}

double DensityField::integral() const {
    double sum = 0.0;
    for (double v : values)
        sum += v;
    return sum * grid.cell_volume();
}

DensityField empirical_density(const AgentEnsemble &ensemble, DensityGrid grid, DepositMode mode,
                               GridPolicy policy) {
    ensemble.validate();
    if (grid.dim != 1 && grid.dim != 2)
        throw std::invalid_argument("density grid must be 1D or 2D");
    if (grid.dim != ensemble.dim)
        throw std::invalid_argument("density grid dimension differs from ensemble dimension");
    if (grid.origin.size() != grid.dim || grid.cell.size() != grid.dim || grid.cells.size() != grid.dim)
        throw std::invalid_argument("density grid axes are incomplete");
    for (std::size_t a = 0; a < grid.dim; ++a)
        if (!(grid.cell[a] > 0.0) || grid.cells[a] == 0)
            throw std::invalid_argument("density grid cells must have positive width and count");
    const bool gaussian = mode.kind == DepositMode::Kind::Gaussian;
    if (gaussian && !(mode.bandwidth > 0.0))
        throw std::invalid_argument("gaussian bandwidth h must be positive");

    const std::size_t n = ensemble.size(), d = grid.dim;
    const double reach = gaussian ? kGaussianTruncation * mode.bandwidth : 0.0;

    for (std::size_t a = 0; a < d; ++a) {
        double lo = ensemble.x[a], hi = ensemble.x[a];
        for (std::size_t i = 0; i < n; ++i) {
            lo = std::min(lo, ensemble.x[i * d + a]);
            hi = std::max(hi, ensemble.x[i * d + a]);
        }
        const double g_lo = grid.origin[a];
        const double g_hi = g_lo + static_cast<double>(grid.cells[a]) * grid.cell[a];
        if (policy == GridPolicy::Strict) {
            if (lo < g_lo || hi > g_hi)
                throw std::out_of_range("agent outside density grid on axis " + std::to_string(a));
            continue;
        }
        if (lo - reach < g_lo) {
            const auto extra = static_cast<std::size_t>(std::ceil((g_lo - (lo - reach)) / grid.cell[a]));
            grid.origin[a] -= static_cast<double>(extra) * grid.cell[a];
            grid.cells[a] += extra;
        }
        const double top = grid.origin[a] + static_cast<double>(grid.cells[a]) * grid.cell[a];
        if (hi + reach > top)
            grid.cells[a] += static_cast<std::size_t>(std::ceil((hi + reach - top) / grid.cell[a]));
    }

    DensityField field{grid, std::vector<double>(grid.total_cells(), 0.0)};
    const double weight = 1.0 / static_cast<double>(n) / grid.cell_volume();
    const std::size_t stride0 = d == 2 ? grid.cells[1] : 1;

    auto cell_index = [&](std::size_t a, double coord) {
        const double rel = (coord - grid.origin[a]) / grid.cell[a];
        const auto top = static_cast<double>(grid.cells[a] - 1);
        return static_cast<std::size_t>(std::clamp(std::floor(rel), 0.0, top));
    };

    for (std::size_t i = 0; i < n; ++i) {
        if (!gaussian) {
            std::size_t flat = cell_index(0, ensemble.x[i * d]) * stride0;
            if (d == 2)
                flat += cell_index(1, ensemble.x[i * d + 1]);
            field.values[flat] += weight;
            continue;
        }
        // Cell-averaged Gaussian: exact cell masses via erf, truncated at 6h.
        std::vector<std::vector<std::pair<std::size_t, double>>> axis_mass(d);
        for (std::size_t a = 0; a < d; ++a) {
            const double c = ensemble.x[i * d + a];
            const std::size_t first = cell_index(a, c - reach);
            const std::size_t last = cell_index(a, c + reach);
            const double scale = 1.0 / (mode.bandwidth * std::sqrt(2.0));
            for (std::size_t k = first; k <= last; ++k) {
                const double left = grid.origin[a] + static_cast<double>(k) * grid.cell[a];
                const double right = left + grid.cell[a];
                const double m = 0.5 * (std::erf((right - c) * scale) - std::erf((left - c) * scale));
                axis_mass[a].emplace_back(k, m);
            }
        }
        if (d == 1) {
            for (auto [k, m] : axis_mass[0])
                field.values[k] += weight * m;
        } else {
            for (auto [k0, m0] : axis_mass[0])
                for (auto [k1, m1] : axis_mass[1])
                    field.values[k0 * stride0 + k1] += weight * m0 * m1;
        }
    }
    return field;
}

double kinetic_consistency_check(const AgentEnsemble &ensemble, const InfluenceFunction &phi,
                                 double alpha) {
    ensemble.validate();
    const std::size_t n = ensemble.size(), d = ensemble.dim;

    // Kinetic field on the empirical measure, evaluated directly from phi.
    std::vector<double> field(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = ensemble.position(i);
        auto vi = ensemble.velocity(i);
        std::vector<double> num(d, 0.0);
        double den = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double w = phi(distance(xi, ensemble.position(j)));
            den += w;
            auto vj = ensemble.velocity(j);
            for (std::size_t k = 0; k < d; ++k)
                num[k] += w * (vj[k] - vi[k]);
        }
        for (std::size_t k = 0; k < d; ++k)
            field[i * d + k] = alpha * num[k] / den;
    }

    ModelSpec mt;
    mt.model = ModelKind::RelativeInfluence;
    mt.phi = phi;
    mt.alpha = alpha;
    const auto particle = rhs(ensemble, mt);

    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = field[i * d + k] - particle[i * d + k];
            sq += diff * diff;
        }
        worst = std::max(worst, std::sqrt(sq));
    }
    return worst;
}

} // namespace flock
