#include <doctest.h>

#include <random>

#include "latkin/errors.hpp"
#include "latkin/numerics.hpp"
#include "latkin/scaling.hpp"
#include "support.hpp"

using namespace latkin;

namespace {

bool has_symbol(const ScalingVerdict& v, const std::string& s) {
  for (const auto& d : v.divergent_terms)
    if (d.symbol == s) return true;
  return false;
}

}  // namespace

TEST_CASE("structure constants of linear coordinates are associative and commutative") {
  std::mt19937_64 rng(7);
  for (std::size_t N = 1; N <= 3; ++N) {
    const StructureConstants C = StructureConstants::from_matrix(support::random_admissible(rng, N));
    CHECK(C.associativity_residual() < 1e-12);
    CHECK(C.commutativity_residual() < 1e-12);
  }
  const StructureConstants H = StructureConstants::hypercubic(3);
  CHECK(H(1, 1, 1) == 1.0);
  CHECK(H(1, 2, 1) == 0.0);
  CHECK(H.associativity_residual() == 0.0);
}

TEST_CASE("hypercubic truncated expansion reproduces unit shifts of cubic polynomials") {
  // f = x0³ − 2 x0 x1² + x1 x2 + 3 x2 − x0²: D_ρ f = f(x + e_ρ) − f(x) exactly
  auto f = [](const Eigen::Vector3d& x) {
    return std::pow(x(0), 3) - 2 * x(0) * x(1) * x(1) + x(1) * x(2) + 3 * x(2) - x(0) * x(0);
  };
  const Eigen::Vector3d x(0.3, -1.2, 0.7);
  std::vector<double> g(3), H(9, 0.0), T(27, 0.0);
  g[0] = 3 * x(0) * x(0) - 2 * x(1) * x(1) - 2 * x(0);
  g[1] = -4 * x(0) * x(1) + x(2);
  g[2] = x(1) + 3;
  auto h = [&](int i, int j, double v) { H[i * 3 + j] = H[j * 3 + i] = v; };
  h(0, 0, 6 * x(0) - 2);
  h(0, 1, -4 * x(1));
  h(1, 1, -4 * x(0));
  h(1, 2, 1);
  auto t = [&](int i, int j, int k, double v) {
    const int idx[3] = {i, j, k};
    int p[3] = {0, 1, 2};
    do T[(idx[p[0]] * 3 + idx[p[1]]) * 3 + idx[p[2]]] = v;
    while (std::next_permutation(p, p + 3));
  };
  t(0, 0, 0, 6);
  t(0, 1, 1, -4);
  const StructureConstants C = StructureConstants::hypercubic(3);
  for (std::size_t rho = 0; rho < 3; ++rho) {
    Eigen::Vector3d y = x;
    y(rho) += 1.0;
    CHECK(truncated_expansion(C, rho, g, H, T) == doctest::Approx(f(y) - f(x)).epsilon(1e-13));
  }
}

TEST_CASE("square-root scaling is ok for random admissible charts") {
  std::mt19937_64 rng(42);
  for (int k = 0; k < 50; ++k) {
    const std::size_t N = 1 + static_cast<std::size_t>(k % 3);
    const Eigen::MatrixXd A = support::random_admissible(rng, N);
    const ScalingVerdict v = order_analysis(StructureConstants::from_matrix(A), ScalingPartition::two_group(N + 1));
    CHECK(v.status == VerdictStatus::ok);
    CHECK(v.highest_order == 2);
    CHECK(min_eigenvalue(v.second_order) >= -1e-12);
    // Q = ½ Σ_κ A^i_κ A^j_κ B̂^κ_0
    const Eigen::VectorXd p = A.inverse().col(0);
    const Eigen::MatrixXd Ax = A.bottomRows(static_cast<Eigen::Index>(N));
    const Eigen::MatrixXd Q = 0.5 * Ax * p.asDiagonal() * Ax.transpose();
    CHECK((v.second_order - Q).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("cubic partitions flag C^{ij}_a") {
  const StructureConstants C = StructureConstants::from_matrix(sign_flip_matrix(2));
  const ScalingVerdict three = order_analysis(C, ScalingPartition::three_group(3, {2}));
  CHECK(three.status == VerdictStatus::requires_constraint);
  CHECK(has_symbol(three, "C^{ij}_a"));
  REQUIRE_FALSE(three.required_constraints.empty());
  CHECK(three.required_constraints.front().find("C^{ij}_a") != std::string::npos);

  const ScalingVerdict cubic = order_analysis(C, ScalingPartition::cubic_two_group(3));
  CHECK(cubic.status == VerdictStatus::requires_constraint);
  CHECK(has_symbol(cubic, "C^{ij}_a"));

  OrderOptions strict;
  strict.allow_constraints = false;
  CHECK(order_analysis(C, ScalingPartition::cubic_two_group(3), strict).status == VerdictStatus::diverges);

  OrderOptions constrained;
  constrained.constraints.push_back({1, 1, 0, 1});  // space-space-time raised one order
  CHECK(order_analysis(C, ScalingPartition::cubic_two_group(3), constrained).status == VerdictStatus::ok);
}

TEST_CASE("ordinary calculus has a first-order limit") {
  const ScalingVerdict v = order_analysis(StructureConstants::zero(3), ScalingPartition::two_group(3));
  CHECK(v.status == VerdictStatus::ok);
  CHECK(v.highest_order == 1);
}

TEST_CASE("uniqueness report") {
  const StructureConstants C = StructureConstants::from_matrix(sign_flip_matrix(2));
  std::vector<ReportFamily> fams = {
      {"sqrt", C, ScalingPartition::two_group(3), {}},
      {"cubic", C, ScalingPartition::cubic_two_group(3), {}},
      {"zero", StructureConstants::zero(3), ScalingPartition::two_group(3), {}},
  };
  const auto rows = second_order_uniqueness_report(fams);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].limit_exists);
  CHECK(rows[0].psd);
  CHECK(rows[0].highest_order == 2);
  CHECK_FALSE(rows[1].limit_exists);
  CHECK(rows[2].highest_order == 1);
  // no surviving limit of order above two is semidefinite
  for (const auto& r : rows)
    if (r.limit_exists && r.highest_order > 2) CHECK_FALSE(r.psd);
  const std::string csv = report_csv(rows);
  CHECK(csv.rfind("family,status,limit_exists,psd,highest_order,notes\n", 0) == 0);
  CHECK(csv.find("C^{ij}_a") != std::string::npos);
  fams.erase(fams.begin() + 1);
  CHECK_THROWS_AS(second_order_uniqueness_report(fams), ConfigError);
}

TEST_CASE("partition validation") {
  CHECK_THROWS_AS(ScalingPartition(3, {{"t", {0}, 1}, {"x", {1, 2}, 1}}), ConfigError);
  CHECK_THROWS_AS(ScalingPartition(3, {{"t", {0}, 2}, {"x", {1}, 1}}), ConfigError);
  CHECK_THROWS_AS(ScalingPartition(3, {{"t", {0, 1}, 2}, {"x", {1, 2}, 1}}), ConfigError);
  CHECK_THROWS_AS(order_analysis(StructureConstants::zero(2), ScalingPartition::two_group(3)), DimensionError);
}

TEST_CASE("theta functionals") {
  const std::vector<Eigen::VectorXd> dirs = {Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, -1.0)};
  const Eigen::VectorXd alpha = Eigen::VectorXd::Ones(1);

  const ThetaReport lc = theta_functionals({"lightcone", alpha, [](double) { return lightcone_matrix(); }}, dirs);
  CHECK_FALSE(lc.theta2_bounded);
  CHECK(lc.diagnostic.find("theta2 diverges") != std::string::npos);
  // θ₂ = 1/(2β) on the lightcone
  CHECK(lc.series[0].theta2.back() == doctest::Approx(1.0 / (2 * kThetaGrid.back())));

  const ThetaReport tilt = theta_functionals({"tilted", alpha,
                                              [](double beta) {
                                                Eigen::MatrixXd M(2, 2);
                                                M << 1, 1, beta, -1;
                                                return M;
                                              }},
                                             dirs);
  CHECK(tilt.theta2_bounded);
  CHECK(tilt.theta3_vanishing);
  CHECK(tilt.b_hat_nonnegative);
  CHECK(tilt.implication_verified);
  CHECK(tilt.schwarz_holds);
  for (double t2 : tilt.series[0].theta2) CHECK(t2 == doctest::Approx(0.5));

  const ThetaReport neg = theta_functionals({"negative", alpha,
                                             [](double) {
                                               Eigen::MatrixXd M(2, 2);
                                               M << 1, 1, -1, -2;
                                               return M;
                                             }},
                                            dirs);
  CHECK_FALSE(neg.b_hat_nonnegative);
  CHECK(neg.diagnostic.find("not guaranteed") != std::string::npos);

  // sign-flip family in two dimensions: θ₂ ~ 1/β, no cubic limit
  Eigen::VectorXd alpha2 = Eigen::VectorXd::Ones(2);
  const ThetaReport sf = theta_functionals({"sign_flip", alpha2, [](double) { return sign_flip_matrix(2); }},
                                           sphere_directions(2, 12));
  CHECK_FALSE(sf.theta2_bounded);
  CHECK(sf.schwarz_holds);
}
