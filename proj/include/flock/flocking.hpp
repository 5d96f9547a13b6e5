#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "flock/dynamics.hpp"
#include "flock/influence.hpp"

namespace flock {

enum class PsiKind { Phi, PhiSquared };

/// psi(r) = scale * phi(r)^power, the rate function in d/dt d_V <= -alpha psi(d_X) d_V.
struct Psi {
    InfluenceFunction phi;
    PsiKind kind{PsiKind::PhiSquared};
    double scale{1.0};

    int power() const { return kind == PsiKind::PhiSquared ? 2 : 1; }
    double operator()(double r) const;
    double integral(double a, double b) const;
    TailIntegral tail(double a) const;
    /// min of psi over [0, r].
    double minimum_up_to(double r) const;
};

/// d_V + alpha * integral_0^{d_X} psi.
double energy(double d_x, double d_v, const Psi &psi, double alpha);

/// Smallest d* >= d_X0 with alpha * integral_{d_X0}^{d*} psi = d_V0, or empty
/// when no finite d* exists.
std::optional<double> solve_flock_diameter(double d_x0, double d_v0, double alpha, const Psi &psi);

enum class Verdict { Unconditional, ConditionalSatisfied, NotGuaranteed };

std::string_view to_string(Verdict v);
std::string_view to_string(PsiKind k);

struct FlockingCertificate {
    PsiKind psi_kind{PsiKind::PhiSquared};
    double psi_scale{1.0};
    double d_x0{0.0};
    double d_v0{0.0};
    double alpha{1.0};
    TailIntegral tail;                  // alpha * integral_{d_X0}^inf psi
    std::optional<double> d_star;
    std::optional<double> predicted_rate; // alpha * min_{[0, d*]} psi
    Verdict verdict{Verdict::NotGuaranteed};
};

/// Certificate for the model's alignment system. psi = phi^2 for CS and MT,
/// beta^2 phi^2 for the leader model; PsiKind::Phi gives the symmetric-theory
/// comparison. The vision model has no certificate (std::invalid_argument).
FlockingCertificate certify(Diameters initial, const ModelSpec &model,
                            PsiKind kind = PsiKind::PhiSquared);

/// Certificate from an explicit psi.
FlockingCertificate certify(Diameters initial, double alpha, const Psi &psi);

/// Negated least-squares slope of log d_V against t over the trailing half of
/// the positive prefix of the series.
double fit_exponential_rate(std::span<const double> times, std::span<const double> d_v);

} // namespace flock
