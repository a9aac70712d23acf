#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "latkin/lattice.hpp"

namespace latkin {

/**
 * Linear chart x^μ = a_μ Σ_ν A^μ_ν u^ν between lattice coordinates u and
 * physical coordinates (t, x^1..x^N), with a_0 = −b and A's first row all ones.
 * Physical vectors are laid out as (t, x^1, ..., x^N).
 */
class CoordinateChart {
 public:
  CoordinateChart(Eigen::MatrixXd A, Eigen::VectorXd a, double b);

  std::size_t N() const { return static_cast<std::size_t>(a_.size()); }
  std::size_t D() const { return N() + 1; }
  double b() const { return b_; }
  const Eigen::VectorXd& a() const { return a_; }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  Eigen::VectorXd scalings() const;  // (−b, a_1, ..., a_N)
  Eigen::MatrixXd h() const;         // a_i a_j / b

  Eigen::VectorXd to_physical(const Eigen::VectorXd& u) const;
  Eigen::VectorXd to_lattice(const Eigen::VectorXd& x) const;
  Eigen::VectorXd to_physical(std::span<const std::int64_t> u) const;
  // x(u + μ̂) − x(u)
  Eigen::VectorXd displacement(std::size_t mu) const;
  // Lattice site whose image is x, if x is one.
  std::optional<Coord> site_of(const Eigen::VectorXd& x, double tol = 1e-9) const;

 private:
  Eigen::MatrixXd A_, B_;
  Eigen::VectorXd a_;
  double b_;
};

CoordinateChart make_lightcone_chart_1d(double a, double b);
// x^i = a_i (Σ_{μ≠i} u^μ − u^i)
CoordinateChart make_sign_flip_chart(const Eigen::VectorXd& a, double b);
// Regular-simplex steps with Σ_μ v_μ v_μᵀ = (N+1)·I, so η = h·I under the default family.
CoordinateChart make_simplex_chart(const Eigen::VectorXd& a, double b);
// Two-dimensional phase-space chart with rows (1,1,1), (κ,λ,μ), (κ′,λ′,μ′).
CoordinateChart make_kramers_chart(const std::array<double, 6>& entries, double a, double abar, double b);
Eigen::MatrixXd sign_flip_matrix(std::size_t N);
Eigen::MatrixXd simplex_matrix(std::size_t N);
Eigen::MatrixXd lightcone_matrix();

/** ε ↦ chart, with declared limit matrix Â. */
struct ScalingFamily {
  std::string name;
  std::function<CoordinateChart(double)> chart_at;
  Eigen::MatrixXd hat_A;

  Eigen::MatrixXd hat_B() const;
  Eigen::VectorXd hat_P() const { return hat_B().col(0); }  // B̂^μ_0
};

// a_i = √h_ii·ε, b = ε², A fixed.
ScalingFamily standard_family(const std::string& name, const Eigen::MatrixXd& A, const Eigen::VectorXd& h_diag);

/**
 * coeff(μ, ν, λ): coefficient of dx^λ in dx^μ • dx^ν, basis index 0 being dt.
 */
struct CommutationTable {
  std::size_t D = 0;
  std::vector<double> coeff;

  double operator()(std::size_t mu, std::size_t nu, std::size_t lambda) const {
    return coeff[(mu * D + nu) * D + lambda];
  }
};

CommutationTable chart_commutation_relations(const CoordinateChart& chart);
// dt rows carry an explicit factor b and vanish; dx^i • dx^j keeps −η̂^{ij} dt,
// extrapolated along the grid. Throws LimitNotFound when η(ε) does not settle or
// a_m/b fails to grow along the grid.
CommutationTable limiting_commutation_table(const ScalingFamily& family, const std::vector<double>& eps_grid);

using PhysicalFunction = std::function<double(const Eigen::VectorXd&)>;

/**
 * Chart difference operators at a lattice image point p = (t, x). The stencil
 * samples the lattice points u + μ̂ one layer down; f itself is a function on
 * physical space, so the off-lattice value f(t−b, x) cancels between ∂_{−t} and Δ.
 */
class DifferenceOperators {
 public:
  explicit DifferenceOperators(CoordinateChart chart) : chart_(std::move(chart)) {}

  // (1/a_i) Σ_μ f(t−b, x^j + a_j A^j_μ) B^μ_i
  double bar_partial(std::size_t i, const PhysicalFunction& f, const Eigen::VectorXd& p) const;
  // (2/b) (Σ_μ f(t−b, x + a A_μ) B^μ_0 − f(t−b, x))
  double laplacian(const PhysicalFunction& f, const Eigen::VectorXd& p) const;
  // (f(t, x) − f(t−b, x)) / b
  double minus_t(const PhysicalFunction& f, const Eigen::VectorXd& p) const;
  // Components of df over (dt, dx^1..dx^N): (∂_{−t} − ½Δ, ∂̄_1, ..., ∂̄_N).
  Eigen::VectorXd differential(const PhysicalFunction& f, const Eigen::VectorXd& p) const;

  const CoordinateChart& chart() const { return chart_; }

 private:
  void require_on_lattice(const Eigen::VectorXd& p) const;
  double stencil(const PhysicalFunction& f, const Eigen::VectorXd& p, std::size_t column) const;
  CoordinateChart chart_;
};

// Closed-form expansion of df for the sign-flip chart in terms of ∂_{−t},
// one-axis second differences and forward mixed differences.
Eigen::VectorXd sign_flip_expansion(const CoordinateChart& chart, const PhysicalFunction& f,
                                    const Eigen::VectorXd& p);

/** Linear map of physical coordinates leaving t fixed: first row (1, 0, ..., 0). */
class ChartTransform {
 public:
  explicit ChartTransform(Eigen::MatrixXd Lambda);
  static ChartTransform identity(std::size_t D) { return ChartTransform(Eigen::MatrixXd::Identity(D, D)); }

  const Eigen::MatrixXd& Lambda() const { return L_; }
  ChartTransform compose(const ChartTransform& inner) const { return ChartTransform(L_ * inner.L_); }
  ChartTransform inverse() const { return ChartTransform(L_.inverse()); }

 private:
  Eigen::MatrixXd L_;
};

// Chart for x′ = Λx, keeping the per-axis scalings a_i.
CoordinateChart apply_transform(const ChartTransform& L, const CoordinateChart& chart);
// H = (D_a A) ℙ (D_a A)ᵗ for probabilities p at one site.
Eigen::MatrixXd transported_correlation(const CoordinateChart& chart, const Eigen::VectorXd& p);
Eigen::MatrixXd transform_correlation(const ChartTransform& L, const Eigen::MatrixXd& H);
// Λ that diagonalizes the spatial block of H; eigenvalues in descending order.
// An already diagonal block yields the identity.
ChartTransform diagonalizing_gauge(const Eigen::MatrixXd& H);
// Requires X to be the same at every site.
ChartTransform diagonalizing_gauge(const CoordinateChart& chart, const ProbabilityVectorField& X);

}  // namespace latkin
