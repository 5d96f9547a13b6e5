#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace flock {

enum class KernelKind { PowerLaw, PowerLawCutoff, Tabulated };

struct Knot {
    double r;
    double value;
    bool operator==(const Knot &) const = default;
};

/// Decreasing influence kernel phi(r) with phi(0) = 1.
///
/// Three shapes are supported: the power law (1+r)^-s, the same law truncated
/// to zero at r >= R, and a piecewise linear table clamped to zero past the
/// last knot. Construction validates the kernel invariants (phi(0) = 1,
/// non-increasing, non-negative) and throws std::invalid_argument otherwise.
class InfluenceFunction {
  public:
    static InfluenceFunction power_law(double s);
    static InfluenceFunction power_law_cutoff(double s, double cutoff);
    static InfluenceFunction tabulated(std::vector<Knot> knots);

    KernelKind kind() const { return kind_; }
    double exponent() const { return s_; }
    double cutoff() const { return cutoff_; }
    const std::vector<Knot> &knots() const { return knots_; }

    /// phi(r); throws std::domain_error for r < 0.
    double operator()(double r) const;

    /// Radius beyond which phi vanishes identically (infinity for the pure
    /// power law).
    double support_radius() const;

    bool operator==(const InfluenceFunction &) const = default;

  private:
    InfluenceFunction() = default;

    KernelKind kind_{KernelKind::PowerLaw};
    double s_{1.0};
    double cutoff_{0.0};
    std::vector<Knot> knots_;
};

double eval_influence(const InfluenceFunction &phi, double r);

/// Result of an improper integral: either a finite value or divergence.
struct TailIntegral {
    bool diverges{false};
    double value{0.0};

    static TailIntegral divergent() { return {true, 0.0}; }
    static TailIntegral finite(double v) { return {false, v}; }
};

/// Integral of phi^power over [a, infinity). power is 1 or 2.
TailIntegral tail_integral(const InfluenceFunction &phi, int power, double a);

/// Integral of phi^power over [a, b], a <= b. Closed form for the power-law
/// kinds, exact segment-wise Simpson for tabulated kernels.
double definite_integral(const InfluenceFunction &phi, int power, double a, double b);

/// Adaptive Simpson quadrature on [a, b] to relative tolerance rel_tol.
template <typename F> double adaptive_simpson(F &&f, double a, double b, double rel_tol);

// ----------------------------------------------------------------------------

enum class ModelKind { CuckerSmale, RelativeInfluence, Leader, Vision };
enum class VisionNormalization { CsStyle, MtStyle };

std::string_view to_string(ModelKind kind);
std::string_view to_string(VisionNormalization norm);
std::string_view to_string(KernelKind kind);

/// Dense row-major N x N matrix.
class SquareMatrix {
  public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

    std::size_t size() const { return n_; }
    double &operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * n_, n_}; }
    const std::vector<double> &data() const { return data_; }

  private:
    std::size_t n_{0};
    std::vector<double> data_;
};

/// Row-stochastic, entrywise non-negative influence matrix a_ij.
struct InfluenceMatrix {
    SquareMatrix entries;
    ModelKind model{ModelKind::RelativeInfluence};

    std::size_t size() const { return entries.size(); }
    double operator()(std::size_t i, std::size_t j) const { return entries(i, j); }
    double min_entry() const;
    double max_entry() const;
};

/// Positions of N agents in R^dim stored row-major (agent-major).
struct PointSet {
    std::size_t dim{1};
    std::span<const double> coords;

    std::size_t count() const { return dim == 0 ? 0 : coords.size() / dim; }
    std::span<const double> point(std::size_t i) const { return coords.subspan(i * dim, dim); }
};

double distance(std::span<const double> a, std::span<const double> b);

/// Cucker-Smale weights a_ij = phi_ij / N off the diagonal, diagonal completing
/// each row to one.
InfluenceMatrix build_cs(PointSet positions, const InfluenceFunction &phi);

/// Relative-influence weights a_ij = phi_ij / sum_k phi_ik (k = i included).
InfluenceMatrix build_mt(PointSet positions, const InfluenceFunction &phi);

/// Single uninfluenced leader at index `leader`; beta in (0, 1).
InfluenceMatrix build_leader(PointSet positions, const InfluenceFunction &phi, double beta,
                             std::size_t leader);

/// Cone-of-vision model. gamma in [-1, 1]; gamma = -1 is the full cone. Agents slower than
/// kVisionMinSpeed see every other agent.
InfluenceMatrix build_vision(PointSet positions, PointSet velocities, const InfluenceFunction &phi,
                             double gamma, VisionNormalization normalization);

inline constexpr double kVisionMinSpeed = 1e-12;

/// Visibility predicate kappa(omega_i, x_j - x_i): true when j lies in the
/// cone of vision of i. Coincident agents and slow agents always see.
bool sees(std::span<const double> xi, std::span<const double> vi, std::span<const double> xj,
          double gamma);

// ----------------------------------------------------------------------------

template <typename F> double adaptive_simpson(F &&f, double a, double b, double rel_tol) {
    struct Panel {
        double a, b, fa, fm, fb, whole;
        int depth;
    };
    auto simpson = [](double a, double b, double fa, double fm, double fb) {
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    };
    if (b <= a)
        return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double coarse = simpson(a, b, fa, fm, fb);
    // Absolute floor scaled by the coarse estimate keeps tiny integrals finite.
    const double abs_tol = rel_tol * std::max(std::abs(coarse), 1e-300);

    double total = 0.0;
    std::vector<Panel> stack{{a, b, fa, fm, fb, coarse, 0}};
    while (!stack.empty()) {
        Panel p = stack.back();
        stack.pop_back();
        const double m = 0.5 * (p.a + p.b);
        const double lm = 0.5 * (p.a + m), rm = 0.5 * (m + p.b);
        const double flm = f(lm), frm = f(rm);
        const double left = simpson(p.a, m, p.fa, flm, p.fm);
        const double right = simpson(m, p.b, p.fm, frm, p.fb);
        const double delta = left + right - p.whole;
        const double local_tol = abs_tol * (p.b - p.a) / (b - a);
        if (p.depth >= 48 || std::abs(delta) <= 15.0 * local_tol) {
            total += left + right + delta / 15.0;
            continue;
        }
        stack.push_back({m, p.b, p.fm, frm, p.fb, right, p.depth + 1});
        stack.push_back({p.a, m, p.fa, flm, p.fm, left, p.depth + 1});
    }
    return total;
}

} // namespace flock
