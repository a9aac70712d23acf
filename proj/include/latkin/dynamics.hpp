#pragma once

#include <array>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "latkin/charts.hpp"
#include "latkin/lattice.hpp"

namespace latkin {

enum class DriftKind { free, constant_force, ornstein_uhlenbeck, kramers, custom };

/** Drift R^i(t, x) of the motion; x excludes time. */
struct DriftSpec {
  using Fn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

  DriftKind kind = DriftKind::free;
  std::size_t N = 1;
  Fn R;
  double gamma = 0.0;
  double beta = 0.0;
  double h = 0.0;
  std::vector<double> force;  // F(x) = Σ_k force[k] x^k

  // R = R0 + J x when the drift is affine and autonomous; lets the stepper
  // fill probabilities without per-site calls.
  struct Affine {
    Eigen::VectorXd R0;
    Eigen::MatrixXd J;
  };
  std::optional<Affine> affine;

  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& x) const { return R(t, x); }

  static DriftSpec free(std::size_t N);
  // R = −2γh
  static DriftSpec constant_force(double gamma, double h);
  // R^i = −2β x^i
  static DriftSpec ornstein_uhlenbeck(double beta, std::size_t N = 1);
  // R_x = y, R_y = −(βy − F(x))
  static DriftSpec kramers(double beta, std::vector<double> force);
  static DriftSpec custom(std::size_t N, Fn R);
};

double eval_polynomial(const std::vector<double>& c, double x);

// P = B·(1, b R^1/a_1, ..., b R^N/a_N) at one physical point (t, x); unvalidated.
// This enforces a_i (AP)^i = b R^i exactly.
Eigen::VectorXd probabilities_at(const DriftSpec& spec, const CoordinateChart& chart, const Eigen::VectorXd& point);

// Validated field on `grid`, site positions supplied by the caller. Out-of-range
// probabilities raise DomainViolation with the admissible extents in the message.
ProbabilityVectorField probabilities_from_drift(const DriftSpec& spec, const CoordinateChart& chart, const Grid& grid,
                                                const std::function<Eigen::VectorXd(std::size_t)>& point_of_site);
// Field on a full lattice window, sites mapped through the chart.
ProbabilityVectorField probabilities_from_drift(const DriftSpec& spec, const CoordinateChart& chart,
                                                const LatticeWindow& window);

// Per-site (a_i/b)(AP)^i, N values per site.
std::vector<double> drift_from_probabilities(const ProbabilityVectorField& X, const CoordinateChart& chart);

struct AxisInterval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool affine = true;  // false: the one-axis probabilities are not affine, no bound derived
};

// For each spatial axis, the interval of x^i (others at the origin, t = 0) where
// every P^μ lies in [0, 1].
std::vector<AxisInterval> admissible_extent(const DriftSpec& spec, const CoordinateChart& chart);
std::string describe_extent(const std::vector<AxisInterval>& ext);

struct ContinuumCoefficients {
  DriftSpec R_hat;
  Eigen::MatrixXd eta_hat;     // extrapolated η(ε)
  Eigen::VectorXd P_hat;       // B̂^μ_0
  Eigen::MatrixXd h_limit;     // lim a_i a_j / b
  Eigen::MatrixXd eta_from_limit_chart;  // h_limit ∘ Σ Â Â B̂_0
  Eigen::MatrixXd eta_from_correlation;  // lattice contraction at the smallest ε
  std::vector<double> eps;
  std::vector<Eigen::MatrixXd> eta_sequence;
  std::vector<Eigen::MatrixXd> correlation_sequence;
  double discrepancy = 0.0;  // max |η̂ − correlation route at smallest ε|
  double fitted_C = 0.0;     // max_ε |correlation route − η̂| / ε
};

// η(ε)^{ij} = (a_i a_j/b) Σ_μ A^i_μ A^j_μ B^μ_0
Eigen::MatrixXd diffusion_matrix(const CoordinateChart& chart);

ContinuumCoefficients continuum_coefficients(const ScalingFamily& family, const DriftSpec& spec,
                                             const std::vector<double>& eps_grid,
                                             std::optional<Eigen::VectorXd> reference_point = std::nullopt);

// Largest |η^{ij}| over rows whose diagonal entry is (numerically) zero.
double zero_diagonal_row_residual(const Eigen::MatrixXd& eta, double tol = 1e-12);

// α̃^μ = du^μ − P^μ ρ
std::vector<LatticeOneForm> centered_forms(const LatticeWindow& w, const ProbabilityVectorField& X);

struct KramersGauge {
  std::array<double, 6> entries{};  // κ, λ, μ, κ′, λ′, μ′
  double det = 0.0;
  double p_hat = 0.0, q_hat = 0.0, r_hat = 0.0;
  // η̂ entries divided by the matching h_ij
  double eta11 = 0.0, eta12 = 0.0, eta22 = 0.0;
};

KramersGauge kramers_gauge(const std::array<double, 6>& entries);

struct KramersGaugeFamily {
  std::string name;
  std::vector<std::string> conditions;
  std::vector<std::string> free_parameters;
  std::string constraint;
  std::string eta22;
  int residual_gauge_dimension = 0;
  std::function<std::array<double, 6>(const std::array<double, 4>&)> entries;
  std::function<bool(const std::array<double, 4>&)> admissible;
};

// Charts with deterministic motion along x in the limit (η̂^{11} = 0), up to a
// permutation of the three lattice directions.
std::vector<KramersGaugeFamily> kramers_gauge_solve();

struct GeneratorDescriptor {
  std::string tag;
  DriftSpec drift;
  Eigen::MatrixXd diffusion;
  std::map<std::string, double> parameters;
};

GeneratorDescriptor limiting_generator(const ContinuumCoefficients& c);

}  // namespace latkin
