#include <doctest.h>

#include <random>

#include "latkin/errors.hpp"
#include "latkin/lattice.hpp"
#include "latkin/numerics.hpp"

using namespace latkin;

TEST_CASE("grid indexing round-trips, last axis fastest") {
  const Grid g({-1, 2}, {1, 4});
  CHECK(g.size() == 9);
  CHECK(g.stride(1) == 1);
  CHECK(g.stride(0) == 3);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(g.index(g.coords(k)) == k);
  CHECK(g.contains(Coord{1, 4}));
  CHECK_FALSE(g.contains(Coord{2, 4}));
}

TEST_CASE("lattice differential is the forward difference; shrinking domain trims the far edge") {
  const LatticeWindow w({0, 0}, {3, 2});
  const LatticeField f =
      LatticeField::from_function(w, [](std::span<const std::int64_t> u) { return double(u[0] * u[0] + 3 * u[1]); });
  const LatticeOneForm df = lattice_differential(f);
  CHECK(df.valid.hi == Coord{2, 1});
  for (std::size_t s = 0; s < w.size(); ++s) {
    const Coord u = w.grid().coords(s);
    if (!df.valid.contains(u)) continue;
    CHECK(df.at(s, 0) == double(2 * u[0] + 1));
    CHECK(df.at(s, 1) == 3.0);
  }
}

TEST_CASE("periodic windows wrap the neighbor") {
  const LatticeWindow w({0, 0}, {2, 2}, BoundaryPolicy::periodic);
  const std::size_t corner = w.grid().index(Coord{2, 1});
  CHECK(w.neighbor(corner, 0) == w.grid().index(Coord{0, 1}));
  const LatticeWindow s({0, 0}, {2, 2});
  CHECK(s.neighbor(corner, 0) == s.size());
}

TEST_CASE("probability fields validate and snap tiny entries") {
  const Grid g({0, 0}, {0, 0});
  const auto X = ProbabilityVectorField::create(g, 2, {1.0 + 5e-13, -5e-13});
  CHECK(X.at(0, 1) == 0.0);
  CHECK(X.at(0, 0) == 1.0 + 5e-13);  // not renormalized
  CHECK_THROWS_AS(ProbabilityVectorField::create(g, 2, {1.1, -0.1}), DomainViolation);
  CHECK_THROWS_AS(ProbabilityVectorField::create(g, 2, {0.5, 0.4}), DomainViolation);
  CHECK_THROWS_AS(ProbabilityVectorField::create(g, 3, {0.5, 0.5}), DimensionError);
}

TEST_CASE("two-direction correlation matrix is p(1-p) times [[1,-1],[-1,1]]") {
  const Grid g({0, 0}, {0, 0});
  const double p = 0.3;
  const auto X = ProbabilityVectorField::create(g, 2, {p, 1 - p});
  const CorrelationMatrix C = correlation_matrix(X);
  CHECK(C.at(0, 0, 0) == doctest::Approx(p * (1 - p)));
  CHECK(C.at(0, 0, 1) == doctest::Approx(-p * (1 - p)));
  CHECK(C.at(0, 1, 1) == doctest::Approx(p * (1 - p)));
}

TEST_CASE("correlation matrix properties on random fields") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0, 1);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t D = 2 + static_cast<std::size_t>(trial % 4);
    const LatticeWindow w(Coord(D, 0), Coord(D, 1));
    std::vector<double> P;
    for (std::size_t s = 0; s < w.size(); ++s) {
      std::vector<double> p(D);
      double tot = 0;
      for (auto& x : p) tot += (x = U(rng));
      for (auto& x : p) x /= tot;
      P.insert(P.end(), p.begin(), p.end());
    }
    const auto X = ProbabilityVectorField::create(w.grid(), D, P);
    const CorrelationMatrix C = correlation_matrix(X), C2 = correlation_matrix_via_unit_form(w, X);
    for (std::size_t s = 0; s < w.size(); ++s) {
      Eigen::MatrixXd M(D, D);
      for (std::size_t m = 0; m < D; ++m)
        for (std::size_t n = 0; n < D; ++n) {
          M(m, n) = C.at(s, m, n);
          CHECK(std::abs(C.at(s, m, n) - C2.at(s, m, n)) < 1e-12);
        }
      CHECK((M - M.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(min_eigenvalue(M) > -1e-12);
      CHECK((M * Eigen::VectorXd::Ones(D)).cwiseAbs().maxCoeff() < 1e-12);
      // strictly positive P: the kernel is exactly one-dimensional
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
      CHECK(es.eigenvalues()(1) > 1e-6);
    }
  }
}

TEST_CASE("covariance of forms equals the correlation quadratic form") {
  const LatticeWindow w({0, 0, 0}, {1, 1, 1});
  const auto X = ProbabilityVectorField::constant(w.grid(), {0.2, 0.5, 0.3});
  LatticeOneForm a = coordinate_form(w, 0), b = coordinate_form(w, 2);
  const LatticeField cov = covariance_of_forms(a, b, X);
  CHECK(cov.values[0] == doctest::Approx(-0.2 * 0.3));
  const LatticeField var = variance_of_form(add(a, b), X);
  // Var(du^0 + du^2) = 0.5·0.5
  CHECK(var.values[3] == doctest::Approx(0.25));
}

TEST_CASE("time form is -b times the unit form and b must be positive") {
  const LatticeWindow w({0, 0}, {1, 1});
  const LatticeOneForm dt = time_form(w, 0.25);
  for (double c : dt.comps) CHECK(c == -0.25);
  CHECK_THROWS_AS(time_form(w, 0.0), ConfigError);
  // ρ • w = w
  const LatticeOneForm u = unit_form_check(coordinate_form(w, 1));
  CHECK(u.comps == coordinate_form(w, 1).comps);
}

TEST_CASE("window validation") {
  CHECK_THROWS_AS(LatticeWindow({0}, {3}), DimensionError);
  CHECK_THROWS_AS(LatticeWindow({0, 0}, {0, 3}), DimensionError);
  CHECK_THROWS_AS(Grid({0, 0}, {1}), DimensionError);
}
