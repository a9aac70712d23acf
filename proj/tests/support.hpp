#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "latkin/charts.hpp"
#include "latkin/dynamics.hpp"
#include "latkin/evolve.hpp"
#include "latkin/graph_calculus.hpp"

namespace support {

// All {0,1} generators supported on the universal calculus of n sites.
inline std::vector<latkin::GraphVectorField> all_binary_fields(std::size_t n) {
  const latkin::EdgeSet es = latkin::EdgeSet::universal(n);
  const std::vector<latkin::Edge> edges(es.edges().begin(), es.edges().end());
  std::vector<latkin::GraphVectorField> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << edges.size()); ++mask) {
    latkin::GraphVectorField X;
    X.sites = n;
    for (std::size_t k = 0; k < edges.size(); ++k)
      if ((mask >> k) & 1) X.set(edges[k].first, edges[k].second, 1.0);
    out.push_back(X);
  }
  return out;
}

// φ = I + X built straight from the coefficients.
inline Eigen::MatrixXd phi_matrix(const latkin::GraphVectorField& X) {
  const auto n = static_cast<Eigen::Index>(X.sites);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  for (const auto& [e, c] : X.coeffs) {
    m(static_cast<Eigen::Index>(e.first), static_cast<Eigen::Index>(e.second)) += c;
    m(static_cast<Eigen::Index>(e.first), static_cast<Eigen::Index>(e.first)) -= c;
  }
  return m;
}

// Expected class from φ alone: multiplicative on products of basis functions,
// then invertible.
inline latkin::GeneratorClass expected_class(const latkin::GraphVectorField& X) {
  const Eigen::MatrixXd phi = phi_matrix(X);
  bool endo = true;
  for (Eigen::Index a = 0; a < phi.rows(); ++a)
    for (Eigen::Index b = 0; b < phi.rows(); ++b) {
      const Eigen::VectorXd lhs = a == b ? Eigen::VectorXd(phi.col(a)) : Eigen::VectorXd::Zero(phi.rows());
      endo = endo && (lhs - phi.col(a).cwiseProduct(phi.col(b))).cwiseAbs().maxCoeff() == 0.0;
    }
  if (!endo) return latkin::GeneratorClass::general;
  return std::abs(phi.determinant()) > 0.5 ? latkin::GeneratorClass::flow : latkin::GeneratorClass::endomorphism_only;
}

// First row ones, B̂ column 0 a random interior point of the simplex, spatial
// rows orthogonal to it: an admissible chart with zero mean displacement.
inline Eigen::MatrixXd random_admissible(std::mt19937_64& rng, std::size_t N) {
  std::uniform_real_distribution<double> U(0.1, 1.0), V(-1, 1);
  const auto D = static_cast<Eigen::Index>(N + 1);
  for (;;) {
    Eigen::VectorXd p(D);
    for (Eigen::Index k = 0; k < D; ++k) p(k) = U(rng);
    p /= p.sum();
    Eigen::MatrixXd A(D, D);
    A.row(0).setOnes();
    for (Eigen::Index i = 1; i < D; ++i) {
      Eigen::VectorXd r(D);
      for (Eigen::Index k = 0; k < D; ++k) r(k) = V(rng);
      r -= (r.dot(p) / p.dot(p)) * p;
      A.row(i) = r.transpose();
    }
    if (std::abs(A.determinant()) > 1e-3) return A;
  }
}

// Quadratic plus two plane waves in (t, x).
inline latkin::PhysicalFunction random_function(std::mt19937_64& rng, std::size_t D) {
  std::uniform_real_distribution<double> U(-1, 1);
  const auto n = static_cast<Eigen::Index>(D);
  Eigen::MatrixXd Q(n, n);
  Eigen::VectorXd g(n), k1(n), k2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i) = U(rng);
    k1(i) = 3 * U(rng);
    k2(i) = 3 * U(rng);
    for (Eigen::Index j = 0; j < n; ++j) Q(i, j) = U(rng);
  }
  const double c1 = U(rng), c2 = U(rng);
  return [=](const Eigen::VectorXd& p) {
    return p.dot(Q * p) + g.dot(p) + c1 * std::sin(k1.dot(p)) + c2 * std::cos(k2.dot(p));
  };
}

// Raw lattice differential at site u, re-expressed in the (dt, dx) basis:
// du^μ = Σ_ν B^μ_ν dx^ν / s_ν with s = (−b, a).
inline Eigen::VectorXd raw_differential(const latkin::CoordinateChart& chart, const latkin::PhysicalFunction& f,
                                        const Eigen::VectorXd& u) {
  const auto D = static_cast<Eigen::Index>(chart.D());
  const Eigen::VectorXd s = chart.scalings();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(D);
  const double f0 = f(chart.to_physical(u));
  for (Eigen::Index mu = 0; mu < D; ++mu) {
    Eigen::VectorXd v = u;
    v(mu) += 1.0;
    const double dmu = f(chart.to_physical(v)) - f0;
    for (Eigen::Index nu = 0; nu < D; ++nu) out(nu) += dmu * chart.B()(mu, nu) / s(nu);
  }
  return out;
}

// Plain stepping loops without the scenario driver.
inline latkin::Slice evolve_distribution(latkin::Slice s, const latkin::DriftSpec& R, const latkin::CoordinateChart& chart, std::size_t steps, int jobs = 1) {
  for (std::size_t n = 0; n < steps; ++n) {
    const latkin::ProbabilityVectorField X = latkin::slice_probabilities(R, chart, s.grid, s.layer, &s.values, jobs);
    s = latkin::step_distribution(s, X, chart, jobs);
  }
  return s;
}

inline latkin::Slice evolve_observable(latkin::Slice s, const latkin::DriftSpec& R, const latkin::CoordinateChart& chart, std::size_t steps) {
  for (std::size_t n = 0; n < steps; ++n) {
    latkin::Box out = s.valid;
    for (auto& h : out.hi) --h;
    const latkin::ProbabilityVectorField X = latkin::slice_probabilities(R, chart, latkin::Grid(out.lo, out.hi), s.layer - 1);
    s = latkin::step_observable(s, X, chart);
  }
  return s;
}

}  // namespace support
