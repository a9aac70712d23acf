#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "latkin/charts.hpp"

namespace latkin {

/** du^μ • du^ν = C^{μν}_ρ du^ρ with constant coefficients. */
struct StructureConstants {
  std::size_t D = 0;
  std::vector<double> C;  // (μ·D + ν)·D + ρ

  double operator()(std::size_t mu, std::size_t nu, std::size_t rho) const { return C[(mu * D + nu) * D + rho]; }
  double& at(std::size_t mu, std::size_t nu, std::size_t rho) { return C[(mu * D + nu) * D + rho]; }

  static StructureConstants zero(std::size_t D);
  // Oriented hypercubic lattice: C^{μν}_ρ = δ^{μν} δ^μ_ρ.
  static StructureConstants hypercubic(std::size_t D);
  // Constants of the linear coordinates w = A u: Σ_κ A^μ_κ A^ν_κ B^κ_ρ.
  static StructureConstants from_matrix(const Eigen::MatrixXd& A);

  // max |(α•β)•γ − α•(β•γ)| over basis triples, and max |C^{μν} − C^{νμ}|.
  double associativity_residual() const;
  double commutativity_residual() const;
};

struct ScalingGroup {
  std::string name;
  std::vector<std::size_t> indices;
  int exponent = 1;  // coordinates scale as λ^exponent
};

/** Partition of coordinate indices into scaling groups; the time group holds index 0. */
class ScalingPartition {
 public:
  // Throws ConfigError unless the groups cover 0..D−1 disjointly with positive
  // exponents and the group of index 0 has the unique largest exponent.
  ScalingPartition(std::size_t D, std::vector<ScalingGroup> groups);

  // time ~ λ², space ~ λ (a²/b fixed)
  static ScalingPartition two_group(std::size_t D);
  // time ~ λ³, space ~ λ (a³/b fixed)
  static ScalingPartition cubic_two_group(std::size_t D);
  // time ~ λ³, y ~ λ², x ~ λ (a²/c and a³/b fixed); `y` lists the middle group.
  static ScalingPartition three_group(std::size_t D, const std::vector<std::size_t>& y);

  std::size_t D() const { return D_; }
  const std::vector<ScalingGroup>& groups() const { return groups_; }
  std::size_t group_of(std::size_t index) const { return group_of_[index]; }
  int exponent(std::size_t index) const { return groups_[group_of_[index]].exponent; }
  std::size_t time_group() const { return group_of_[0]; }
  bool is_time(std::size_t index) const { return group_of_[index] == time_group(); }
  // Index letter used in term symbols: "a" for time, then "i", "r", "p", ... by exponent.
  char letter(std::size_t group, int which = 0) const;

 private:
  std::size_t D_;
  std::vector<ScalingGroup> groups_;
  std::vector<std::size_t> group_of_;
  std::vector<std::string> letters_;
};

// C^{(g1 g2)}_{g3} = λ^order K: raises the order of every such term by `order`.
struct ImposedConstraint {
  std::size_t group_mu, group_nu, group_rho;
  int order = 1;
};

enum class TermKind { commutation, expansion };

struct TermOrder {
  TermKind kind;
  std::vector<std::size_t> indices;  // commutation: (μ, ν, ρ); expansion: (μ1..μr, ρ)
  int order = 0;                     // power of λ in front of the term in physical coordinates
  double coefficient = 0.0;          // leading nonzero coefficient
};

struct DivergentTerm {
  std::string symbol;  // e.g. "C^{ij}_a"
  int order = 0;
};

enum class VerdictStatus { ok, requires_constraint, diverges };
std::string to_string(VerdictStatus s);

struct ScalingVerdict {
  VerdictStatus status = VerdictStatus::ok;
  std::vector<DivergentTerm> divergent_terms;
  std::vector<std::string> required_constraints;
  std::vector<TermOrder> terms;
  // Surviving commutation coefficients (order 0), zero elsewhere.
  StructureConstants limit_table;
  // ½ × surviving coefficient of ∂_i∂_j in D_0 f over non-time indices.
  Eigen::MatrixXd second_order;
  int highest_order = 1;  // largest r with a surviving term in a time-index D_ρ f
};

struct OrderOptions {
  std::vector<ImposedConstraint> constraints;
  bool allow_constraints = true;  // false: report `diverges` instead of `requires_constraint`
};

ScalingVerdict order_analysis(const StructureConstants& C, const ScalingPartition& part,
                              const OrderOptions& opt = {});

// D_ρ f truncated after the cubic terms, from the derivatives of f at one point
// (grad: D, hess: D×D row-major, third: D³).
double truncated_expansion(const StructureConstants& C, std::size_t rho, const std::vector<double>& grad,
                           const std::vector<double>& hess, const std::vector<double>& third);

struct ReportFamily {
  std::string name;
  StructureConstants C;
  ScalingPartition partition;
  OrderOptions options;
};

struct ReportRow {
  std::string name;
  VerdictStatus status;
  bool limit_exists = false;
  bool psd = false;
  int highest_order = 0;
  std::vector<std::string> notes;  // divergent symbols / constraints
};

// Requires at least one two-group and one cubic (exponent 3 time group) family.
std::vector<ReportRow> second_order_uniqueness_report(const std::vector<ReportFamily>& families);
std::string report_csv(const std::vector<ReportRow>& rows);

/** Hypercubic chart family under a_i = β α_i, b = β³, A possibly β-dependent. */
struct CubicFamily {
  std::string name;
  Eigen::VectorXd alpha;
  std::function<Eigen::MatrixXd(double)> A;
};

struct ThetaSeries {
  Eigen::VectorXd xi;
  std::vector<double> theta2, theta3, schwarz_bound;
};

struct ThetaReport {
  std::string name;
  std::vector<double> betas;
  std::vector<ThetaSeries> series;
  std::vector<double> max_theta2, max_theta3;  // per β over all directions
  bool theta2_bounded = false;
  bool theta3_vanishing = false;
  bool b_hat_nonnegative = false;
  bool schwarz_holds = true;
  bool implication_verified = false;  // bounded θ₂ and B̂ ≥ 0 and θ₃ → 0
  std::string diagnostic;
};

// θ₂ = (1/2β) Σ_μ A_μ(ξ)² B^μ_0, θ₃ = (1/6) Σ_μ A_μ(ξ)³ B^μ_0, A_μ(ξ) = Σ_j α_j A^j_μ ξ_j.
std::pair<double, double> theta_at(const Eigen::MatrixXd& A, const Eigen::VectorXd& alpha, double beta,
                                   const Eigen::VectorXd& xi);

inline const std::vector<double> kThetaGrid = {0.16, 0.04, 0.01};

ThetaReport theta_functionals(const CubicFamily& family, const std::vector<Eigen::VectorXd>& directions,
                              const std::vector<double>& beta_grid = kThetaGrid);

}  // namespace latkin
