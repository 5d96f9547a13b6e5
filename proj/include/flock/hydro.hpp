#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "flock/activeset.hpp"
#include "flock/dynamics.hpp"
#include "flock/flocking.hpp"
#include "flock/influence.hpp"

namespace flock {

/// Cell-centered density and velocity on a uniform 1D grid.
struct HydroState1D {
    double x_min{0.0};
    double dx{1.0};
    std::vector<double> rho;
    std::vector<double> u;
    double t{0.0};

    std::size_t cells() const { return rho.size(); }
    double center(std::size_t i) const { return x_min + (static_cast<double>(i) + 0.5) * dx; }
    double mass() const;
    void validate() const;
};

enum class Boundary { Outflow, Periodic };

/// Cells with rho < kVacuumFraction * max(rho) are vacuum: they are excluded
/// from nonlocal sums, emit no flux and their velocity is not evolved.
inline constexpr double kVacuumFraction = 1e-14;
inline constexpr double kCflLimit = 0.9;

std::vector<bool> vacuum_mask(const HydroState1D &state);

/// Density-weighted nonlocal average of u with kernel phi(|x_i - x_j|). On a
/// periodic grid distances use the minimum image.
std::vector<double> nonlocal_average(const HydroState1D &state, const InfluenceFunction &phi,
                                     Boundary boundary = Boundary::Outflow);

/// One first-order upwind step of the pressureless system with velocity
/// relaxation alpha (u_bar - u). Throws StabilityError on a CFL or alpha*dt
/// violation.
HydroState1D step_eulerian(const HydroState1D &state, const InfluenceFunction &phi, double alpha,
                           double dt, Boundary boundary = Boundary::Outflow);

inline constexpr double kDefaultSupportThreshold = 1e-6;

/// Diameters over the support {rho >= epsilon * max rho}.
Diameters hydro_diameters(const HydroState1D &state, double epsilon = kDefaultSupportThreshold);

FlockingCertificate hydro_certify(const HydroState1D &state0, const InfluenceFunction &phi,
                                  double alpha, double epsilon = kDefaultSupportThreshold);

struct HydroRunOptions {
    double dt{0.01};
    double t_end{1.0};
    Boundary boundary{Boundary::Outflow};
    std::size_t field_stride{0};
    double epsilon{kDefaultSupportThreshold};
    double stop_ratio{0.0}; // stop when d_V <= stop_ratio * d_V(0)
};

struct HydroTrajectory {
    std::vector<double> times;
    std::vector<double> mass;
    std::vector<double> d_x;
    std::vector<double> d_v;
    std::vector<HydroState1D> fields;
    HydroState1D final_state;
    double worst_mass_drift{0.0}; // max relative one-step mass change
};

HydroTrajectory simulate_eulerian(const HydroState1D &initial, const InfluenceFunction &phi,
                                  double alpha, const HydroRunOptions &options);

/// Compactly supported density bump rho = height * cos^2(pi (x - c) / (2 w)) on
/// |x - c| < w travelling with the given velocity.
struct Bump {
    double center{0.0};
    double half_width{1.0};
    double height{1.0};
    double velocity{0.0};
    bool operator==(const Bump &) const = default;
};

/// Grid covering [x_min, x_max] with cell width dx. Where bumps overlap, u is
/// their density-weighted velocity; vacuum cells get u = 0.
HydroState1D make_bump_state(double x_min, double x_max, double dx, std::span<const Bump> bumps);

// ----------------------------------------------------------------------------

/// Mass-weighted particles along characteristics, any dimension.
struct LagrangianParticles {
    double t{0.0};
    std::size_t dim{1};
    std::vector<double> x;
    std::vector<double> u;
    std::vector<double> m;

    std::size_t size() const { return m.size(); }
    void validate() const;
};

std::vector<double> lagrangian_rhs(const LagrangianParticles &p, const InfluenceFunction &phi,
                                   double alpha);

LagrangianParticles step_lagrangian(const LagrangianParticles &p, const InfluenceFunction &phi,
                                    double alpha, double dt, Scheme scheme);

// ----------------------------------------------------------------------------

/// Grid form of the antisymmetric kernel bound. The fields become the weight
/// vectors U_i = u_i rho_i dx and W_i = w_i rho_i dx, and the bound is the
/// discrete one for kernel(i, j) with those weights.
LemmaCheck kernel_action_bound(const SquareMatrix &kernel, std::span<const double> u,
                               std::span<const double> w, std::span<const double> rho, double dx,
                               double theta);

} // namespace flock
