#pragma once

#include <vector>

#include <Eigen/Dense>

namespace latkin {

struct Extrapolation {
  Eigen::MatrixXd limit;
  // Richardson estimates from successive grid pairs (finest last); a single grid
  // point yields its raw value.
  std::vector<Eigen::MatrixXd> estimates;
  double relative_change = 0.0;  // between the two finest estimates
  bool converged = false;
};

inline constexpr double kLimitTolerance = 1e-6;

// Order-1 Richardson extrapolation of matrix-valued samples v(ε) on a strictly
// decreasing ε grid.
Extrapolation richardson_limit(const std::vector<double>& eps, const std::vector<Eigen::MatrixXd>& values,
                               double rel_tol = kLimitTolerance);

bool is_strictly_decreasing(const std::vector<double>& v);

// Smallest eigenvalue of the symmetric part.
double min_eigenvalue(const Eigen::MatrixXd& m);

// Points on the unit sphere in R^n from a Halton sequence, followed by the
// coordinate axes.
std::vector<Eigen::VectorXd> sphere_directions(int n, int count = 20);

}  // namespace latkin
