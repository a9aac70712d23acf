#include "latkin/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "latkin/errors.hpp"

namespace latkin {

bool is_strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (!(v[k] < v[k - 1])) return false;
  return !v.empty();
}

Extrapolation richardson_limit(const std::vector<double>& eps, const std::vector<Eigen::MatrixXd>& values,
                               double rel_tol) {
  if (eps.size() != values.size() || eps.empty()) throw DimensionError("richardson: one value per grid point");
  if (!is_strictly_decreasing(eps)) throw ConfigError("eps grid must be strictly decreasing");
  Extrapolation out;
  if (eps.size() == 1) {
    out.estimates.push_back(values[0]);
  } else {
    for (std::size_t k = 1; k < eps.size(); ++k) {
      const double r = eps[k - 1] / eps[k];
      out.estimates.push_back((r * values[k] - values[k - 1]) / (r - 1.0));
    }
  }
  out.limit = out.estimates.back();
  const Eigen::MatrixXd& last = out.estimates.back();
  const Eigen::MatrixXd& prev = out.estimates.size() >= 2 ? out.estimates[out.estimates.size() - 2]
                                                          : (eps.size() >= 2 ? values.back() : last);
  const double scale = std::max({last.cwiseAbs().maxCoeff(), prev.cwiseAbs().maxCoeff(), 1e-300});
  out.relative_change = (last - prev).cwiseAbs().maxCoeff() / scale;
  if (last.cwiseAbs().maxCoeff() == 0.0 && prev.cwiseAbs().maxCoeff() == 0.0) out.relative_change = 0.0;
  out.converged = out.relative_change < rel_tol;
  return out;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

namespace {

double halton(int index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

}  // namespace

std::vector<Eigen::VectorXd> sphere_directions(int n, int count) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  if (n < 1 || n > 12) throw ConfigError("sphere_directions supports 1..12 dimensions");
  std::vector<Eigen::VectorXd> out;
  for (int k = 1; static_cast<int>(out.size()) < count; ++k) {
    Eigen::VectorXd v(n);
    for (int j = 0; j < n; ++j) v(j) = 2.0 * halton(k, primes[j]) - 1.0;
    if (n == 1) v(0) = (k % 2) ? 1.0 : -1.0;
    const double norm = v.norm();
    if (norm < 1e-3) continue;
    out.push_back(v / norm);
  }
  for (int j = 0; j < n; ++j) out.push_back(Eigen::VectorXd::Unit(n, j));
  return out;
}

}  // namespace latkin
