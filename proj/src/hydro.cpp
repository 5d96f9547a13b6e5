#include "flock/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "flock/errors.hpp"

namespace flock {

namespace {

double max_density(const HydroState1D &s) {
    double m = 0.0;
    for (double r : s.rho)
        m = std::max(m, r);
    return m;
}

// phi evaluated at every cell offset; the grid is uniform so distances depend
// only on |i - j|.
std::vector<double> offset_kernel(const InfluenceFunction &phi, std::size_t cells, double dx,
                                  Boundary boundary) {
    std::vector<double> w(cells);
    for (std::size_t k = 0; k < cells; ++k) {
        const std::size_t off = boundary == Boundary::Periodic ? std::min(k, cells - k) : k;
        w[k] = phi(static_cast<double>(off) * dx);
    }
    return w;
}

std::vector<double> average_with(const HydroState1D &s, const std::vector<double> &kernel,
                                 const std::vector<bool> &vacuum) {
    const std::size_t n = s.cells();
    std::vector<std::size_t> occupied;
    for (std::size_t j = 0; j < n; ++j)
        if (!vacuum[j])
            occupied.push_back(j);
    std::vector<double> avg(n);
    for (std::size_t i = 0; i < n; ++i) {
        double num = 0.0, den = 0.0;
        for (std::size_t j : occupied) {
            const double w = kernel[i > j ? i - j : j - i] * s.rho[j] * s.dx;
            num += w * s.u[j];
            den += w;
        }
        avg[i] = den > 0.0 ? num / den : s.u[i];
    }
    return avg;
}

} // namespace

double HydroState1D::mass() const {
    double m = 0.0;
    for (double r : rho)
        m += r;
    return m * dx;
}

void HydroState1D::validate() const {
    if (rho.empty() || rho.size() != u.size())
        throw std::invalid_argument("hydro state needs matching, non-empty rho and u fields");
    if (!(dx > 0.0) || !std::isfinite(dx) || !std::isfinite(x_min))
        throw std::invalid_argument("hydro grid needs a finite origin and positive dx");
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (!(rho[i] >= 0.0) || !std::isfinite(rho[i]))
            throw std::invalid_argument("hydro density must be finite and non-negative");
        if (!std::isfinite(u[i]))
            throw std::invalid_argument("hydro velocity must be finite");
    }
}

std::vector<bool> vacuum_mask(const HydroState1D &state) {
    const double floor = kVacuumFraction * max_density(state);
    std::vector<bool> vac(state.cells());
    for (std::size_t i = 0; i < state.cells(); ++i)
        vac[i] = !(state.rho[i] > 0.0) || state.rho[i] < floor;
    return vac;
}

std::vector<double> nonlocal_average(const HydroState1D &state, const InfluenceFunction &phi,
                                     Boundary boundary) {
    state.validate();
    if (max_density(state) <= 0.0)
        throw std::invalid_argument("nonlocal_average: density vanishes everywhere");
    const auto kernel = offset_kernel(phi, state.cells(), state.dx, boundary);
    return average_with(state, kernel, vacuum_mask(state));
}

HydroState1D step_eulerian(const HydroState1D &state, const InfluenceFunction &phi, double alpha,
                           double dt, Boundary boundary) {
    state.validate();
    if (!(dt > 0.0) || !(alpha > 0.0))
        throw std::invalid_argument("step_eulerian: dt and alpha must be positive");
    if (alpha * dt > 1.0 + 1e-12)
        throw StabilityError("step_eulerian: alpha*dt exceeds 1");
    if (max_density(state) <= 0.0)
        throw std::invalid_argument("step_eulerian: density vanishes everywhere");

    const std::size_t n = state.cells();
    const auto vacuum = vacuum_mask(state);
    const double nu = dt / state.dx;

    double u_max = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (!vacuum[i])
            u_max = std::max(u_max, std::abs(state.u[i]));
    if (u_max * nu > kCflLimit)
        throw StabilityError("step_eulerian: CFL number " + std::to_string(u_max * nu) +
                             " exceeds " + std::to_string(kCflLimit));

    // Donor-cell transport of mass: each occupied cell ships rho |u| dt/dx to
    // the neighbour its velocity points at. Every shipped amount is subtracted
    // and added once, so the total telescopes.
    std::vector<double> rho = state.rho;
    std::vector<double> inflow_mass(n, 0.0), inflow_momentum(n, 0.0);
    auto neighbour = [&](std::size_t i, bool right) -> std::optional<std::size_t> {
        if (right)
            return i + 1 < n ? std::optional(i + 1)
                             : (boundary == Boundary::Periodic ? std::optional<std::size_t>(0) : std::nullopt);
        return i > 0 ? std::optional(i - 1)
                     : (boundary == Boundary::Periodic ? std::optional(n - 1) : std::nullopt);
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (vacuum[i] || state.u[i] == 0.0)
            continue;
        const double shipped = state.rho[i] * std::abs(state.u[i]) * nu;
        rho[i] -= shipped;
        if (auto to = neighbour(i, state.u[i] > 0.0)) {
            rho[*to] += shipped;
            inflow_mass[*to] += shipped;
            inflow_momentum[*to] += shipped * state.u[i];
        }
    }
    if (boundary == Boundary::Outflow) {
        // Zero-gradient ghosts feed the edge cells when their velocity points inward.
        if (!vacuum[0] && state.u[0] > 0.0) {
            const double in = state.rho[0] * state.u[0] * nu;
            rho[0] += in;
            inflow_mass[0] += in;
            inflow_momentum[0] += in * state.u[0];
        }
        if (!vacuum[n - 1] && state.u[n - 1] < 0.0) {
            const double in = state.rho[n - 1] * -state.u[n - 1] * nu;
            rho[n - 1] += in;
            inflow_mass[n - 1] += in;
            inflow_momentum[n - 1] += in * state.u[n - 1];
        }
    }

    // Velocity transport: non-conservative upwind u_t + u u_x = 0 on occupied
    // cells, zero gradient against vacuum or the outflow edge. Cells that were
    // vacuum take the velocity of the mass flowing into them.
    std::vector<double> u = state.u;
    for (std::size_t i = 0; i < n; ++i) {
        const double ui = state.u[i];
        if (vacuum[i]) {
            if (inflow_mass[i] > 0.0)
                u[i] = inflow_momentum[i] / inflow_mass[i];
            continue;
        }
        if (ui == 0.0)
            continue;
        const auto up = neighbour(i, ui < 0.0);
        if (!up || vacuum[*up])
            continue;
        u[i] = ui - nu * std::abs(ui) * (ui - state.u[*up]);
    }

    HydroState1D next{state.x_min, state.dx, std::move(rho), std::move(u), state.t + dt};

    // Relaxation toward the nonlocal average of the transported state.
    const auto vac_next = vacuum_mask(next);
    const auto kernel = offset_kernel(phi, n, state.dx, boundary);
    const auto avg = average_with(next, kernel, vac_next);
    for (std::size_t i = 0; i < n; ++i)
        if (!vac_next[i])
            next.u[i] += alpha * dt * (avg[i] - next.u[i]);

    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(next.rho[i]) || !std::isfinite(next.u[i]))
            throw NumericError("step_eulerian: non-finite field after step");
    return next;
}

Diameters hydro_diameters(const HydroState1D &state, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("hydro_diameters: epsilon must lie in (0, 1)");
    const double floor = epsilon * max_density(state);
    std::optional<std::size_t> first, last;
    double u_lo = 0.0, u_hi = 0.0;
    for (std::size_t i = 0; i < state.cells(); ++i) {
        if (!(state.rho[i] > 0.0) || state.rho[i] < floor)
            continue;
        if (!first) {
            first = i;
            u_lo = u_hi = state.u[i];
        }
        last = i;
        u_lo = std::min(u_lo, state.u[i]);
        u_hi = std::max(u_hi, state.u[i]);
    }
    if (!first)
        throw std::invalid_argument("hydro_diameters: density support is empty");
    return {static_cast<double>(*last - *first) * state.dx, u_hi - u_lo};
}

FlockingCertificate hydro_certify(const HydroState1D &state0, const InfluenceFunction &phi,
                                  double alpha, double epsilon) {
    return certify(hydro_diameters(state0, epsilon), alpha, Psi{phi, PsiKind::PhiSquared, 1.0});
}

HydroTrajectory simulate_eulerian(const HydroState1D &initial, const InfluenceFunction &phi,
                                  double alpha, const HydroRunOptions &options) {
    initial.validate();
    if (!(options.t_end > 0.0) || !(options.dt > 0.0))
        throw std::invalid_argument("simulate_eulerian: dt and T must be positive");
    const auto steps = static_cast<std::size_t>(std::llround(options.t_end / options.dt));

    HydroTrajectory tr;
    auto record = [&](const HydroState1D &s) {
        const auto d = hydro_diameters(s, options.epsilon);
        tr.times.push_back(s.t);
        tr.mass.push_back(s.mass());
        tr.d_x.push_back(d.d_x);
        tr.d_v.push_back(d.d_v);
    };
    HydroState1D state = initial;
    record(state);
    if (options.field_stride > 0)
        tr.fields.push_back(state);
    for (std::size_t k = 0; k < steps; ++k) {
        HydroState1D next = step_eulerian(state, phi, alpha, options.dt, options.boundary);
        next.t = initial.t + static_cast<double>(k + 1) * options.dt;
        const double before = state.mass();
        tr.worst_mass_drift = std::max(tr.worst_mass_drift, std::abs(next.mass() - before) / before);
        state = std::move(next);
        record(state);
        if (options.field_stride > 0 && (k + 1) % options.field_stride == 0)
            tr.fields.push_back(state);
        if (options.stop_ratio > 0.0 && tr.d_v.back() <= options.stop_ratio * tr.d_v.front())
            break;
    }
    tr.final_state = std::move(state);
    return tr;
}

HydroState1D make_bump_state(double x_min, double x_max, double dx, std::span<const Bump> bumps) {
    if (!(x_max > x_min) || !(dx > 0.0))
        throw std::invalid_argument("make_bump_state: need x_max > x_min and dx > 0");
    const auto cells = static_cast<std::size_t>(std::ceil((x_max - x_min) / dx - 1e-9));
    HydroState1D s{x_min, dx, std::vector<double>(cells, 0.0), std::vector<double>(cells, 0.0), 0.0};
    for (std::size_t i = 0; i < cells; ++i) {
        const double x = s.center(i);
        double rho = 0.0, mom = 0.0;
        for (const auto &b : bumps) {
            const double z = (x - b.center) / b.half_width;
            if (std::abs(z) >= 1.0)
                continue;
            const double c = std::cos(0.5 * std::numbers::pi * z);
            const double r = b.height * c * c;
            rho += r;
            mom += r * b.velocity;
        }
        s.rho[i] = rho;
        s.u[i] = rho > 0.0 ? mom / rho : 0.0;
    }
    return s;
}

// ----------------------------------------------------------------------------

void LagrangianParticles::validate() const {
    if (dim < 1 || m.empty() || x.size() != m.size() * dim || u.size() != x.size())
        throw std::invalid_argument("lagrangian particles: inconsistent shapes");
    for (double mi : m)
        if (!(mi > 0.0) || !std::isfinite(mi))
            throw std::invalid_argument("lagrangian particles: masses must be positive");
    for (std::size_t k = 0; k < x.size(); ++k)
        if (!std::isfinite(x[k]) || !std::isfinite(u[k]))
            throw std::invalid_argument("lagrangian particles: non-finite state");
}

std::vector<double> lagrangian_rhs(const LagrangianParticles &p, const InfluenceFunction &phi,
                                   double alpha) {
    const std::size_t n = p.size(), d = p.dim;
    std::vector<double> acc(n * d, 0.0);
    std::vector<double> num(d);
    for (std::size_t i = 0; i < n; ++i) {
        std::span<const double> xi(p.x.data() + i * d, d);
        std::fill(num.begin(), num.end(), 0.0);
        double den = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double w = phi(distance(xi, std::span<const double>(p.x.data() + j * d, d))) * p.m[j];
            den += w;
            for (std::size_t k = 0; k < d; ++k)
                num[k] += w * p.u[j * d + k];
        }
        for (std::size_t k = 0; k < d; ++k)
            acc[i * d + k] = alpha * (num[k] / den - p.u[i * d + k]);
    }
    return acc;
}

LagrangianParticles step_lagrangian(const LagrangianParticles &p, const InfluenceFunction &phi,
                                    double alpha, double dt, Scheme scheme) {
    p.validate();
    if (!(dt > 0.0) || !(alpha > 0.0))
        throw std::invalid_argument("step_lagrangian: dt and alpha must be positive");
    if (scheme == Scheme::Euler && alpha * dt > 1.0 + 1e-12)
        throw StabilityError("step_lagrangian: explicit Euler requires alpha*dt <= 1");

    auto shifted = [&](const LagrangianParticles &base, double h, const std::vector<double> &kx,
                       const std::vector<double> &ku) {
        LagrangianParticles q = base;
        for (std::size_t k = 0; k < q.x.size(); ++k) {
            q.x[k] = p.x[k] + h * kx[k];
            q.u[k] = p.u[k] + h * ku[k];
        }
        return q;
    };

    LagrangianParticles next = p;
    next.t = p.t + dt;
    const auto a1 = lagrangian_rhs(p, phi, alpha);
    if (scheme == Scheme::Euler) {
        next = shifted(p, dt, p.u, a1);
    } else {
        const auto s2 = shifted(p, 0.5 * dt, p.u, a1);
        const auto a2 = lagrangian_rhs(s2, phi, alpha);
        const auto s3 = shifted(p, 0.5 * dt, s2.u, a2);
        const auto a3 = lagrangian_rhs(s3, phi, alpha);
        const auto s4 = shifted(p, dt, s3.u, a3);
        const auto a4 = lagrangian_rhs(s4, phi, alpha);
        for (std::size_t k = 0; k < p.x.size(); ++k) {
            next.x[k] = p.x[k] + dt / 6.0 * (p.u[k] + 2.0 * s2.u[k] + 2.0 * s3.u[k] + s4.u[k]);
            next.u[k] = p.u[k] + dt / 6.0 * (a1[k] + 2.0 * a2[k] + 2.0 * a3[k] + a4[k]);
        }
    }
    next.t = p.t + dt;
    for (std::size_t k = 0; k < next.x.size(); ++k)
        if (!std::isfinite(next.x[k]) || !std::isfinite(next.u[k]))
            throw NumericError("step_lagrangian: non-finite state after step");
    return next;
}

// ----------------------------------------------------------------------------

LemmaCheck kernel_action_bound(const SquareMatrix &kernel, std::span<const double> u,
                               std::span<const double> w, std::span<const double> rho, double dx,
                               double theta) {
    const std::size_t n = kernel.size();
    if (u.size() != n || w.size() != n || rho.size() != n)
        throw std::invalid_argument("kernel_action_bound: field sizes must match the kernel");
    if (!(dx > 0.0))
        throw std::invalid_argument("kernel_action_bound: dx must be positive");
    std::vector<double> uw(n), ww(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(rho[i] >= 0.0))
            throw std::invalid_argument("kernel_action_bound: rho must be non-negative");
        uw[i] = u[i] * rho[i] * dx;
        ww[i] = w[i] * rho[i] * dx;
    }
    return lemma_action_bound(kernel, uw, ww, theta);
}

} // namespace flock
