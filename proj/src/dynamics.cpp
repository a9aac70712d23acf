#include "latkin/dynamics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "latkin/errors.hpp"
#include "latkin/numerics.hpp"

namespace latkin {

DriftSpec DriftSpec::free(std::size_t N) {
  DriftSpec s;
  s.kind = DriftKind::free;
  s.N = N;
  const auto n = static_cast<Eigen::Index>(N);
  s.R = [n](double, const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(n); };
  s.affine = Affine{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  return s;
}

DriftSpec DriftSpec::constant_force(double gamma, double h) {
  if (!(h > 0)) throw ConfigError("constant_force needs h > 0");
  DriftSpec s;
  s.kind = DriftKind::constant_force;
  s.N = 1;
  s.gamma = gamma;
  s.h = h;
  const double r = -2.0 * gamma * h;
  s.R = [r](double, const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, r); };
  s.affine = Affine{Eigen::VectorXd::Constant(1, r), Eigen::MatrixXd::Zero(1, 1)};
  return s;
}

DriftSpec DriftSpec::ornstein_uhlenbeck(double beta, std::size_t N) {
  if (!(beta > 0)) throw ConfigError("ou needs beta > 0");
  DriftSpec s;
  s.kind = DriftKind::ornstein_uhlenbeck;
  s.N = N;
  s.beta = beta;
  s.R = [beta](double, const Eigen::VectorXd& x) -> Eigen::VectorXd { return -2.0 * beta * x; };
  const auto n = static_cast<Eigen::Index>(N);
  s.affine = Affine{Eigen::VectorXd::Zero(n), -2.0 * beta * Eigen::MatrixXd::Identity(n, n)};
  return s;
}

DriftSpec DriftSpec::kramers(double beta, std::vector<double> force) {
  if (!(beta >= 0)) throw ConfigError("kramers needs beta >= 0");
  DriftSpec s;
  s.kind = DriftKind::kramers;
  s.N = 2;
  s.beta = beta;
  s.force = force;
  s.R = [beta, force](double, const Eigen::VectorXd& x) {
    Eigen::VectorXd r(2);
    r(0) = x(1);
    r(1) = -(beta * x(1) - eval_polynomial(force, x(0)));
    return r;
  };
  if (force.size() <= 2) {
    Affine af{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2)};
    af.R0(1) = force.empty() ? 0.0 : force[0];
    af.J << 0, 1, (force.size() > 1 ? force[1] : 0.0), -beta;
    s.affine = af;
  }
  return s;
}

DriftSpec DriftSpec::custom(std::size_t N, Fn R) {
  DriftSpec s;
  s.kind = DriftKind::custom;
  s.N = N;
  s.R = std::move(R);
  return s;
}

double eval_polynomial(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
  return acc;
}

Eigen::VectorXd probabilities_at(const DriftSpec& spec, const CoordinateChart& chart, const Eigen::VectorXd& point) {
  if (spec.N != chart.N()) throw DimensionError("drift and chart have different spatial dimension");
  const Eigen::Index N = static_cast<Eigen::Index>(chart.N());
  const Eigen::VectorXd R = spec(point(0), point.tail(N));
  Eigen::VectorXd target(N + 1);
  target(0) = 1.0;
  for (Eigen::Index i = 0; i < N; ++i) target(i + 1) = chart.b() * R(i) / chart.a()(i);
  return chart.B() * target;
}

std::vector<AxisInterval> admissible_extent(const DriftSpec& spec, const CoordinateChart& chart) {
  const Eigen::Index N = static_cast<Eigen::Index>(chart.N());
  std::vector<AxisInterval> out(static_cast<std::size_t>(N));
  for (Eigen::Index m = 0; m < N; ++m) {
    const double unit = chart.a()(m);
    auto P = [&](double s) {
      Eigen::VectorXd p = Eigen::VectorXd::Zero(N + 1);
      p(m + 1) = s * unit;
      return probabilities_at(spec, chart, p);
    };
    const Eigen::VectorXd p0 = P(0), p1 = P(1), p2 = P(2), pm = P(-1);
    const Eigen::VectorXd g = p1 - p0;
    const double curv = std::max((p2 - 2 * p1 + p0).cwiseAbs().maxCoeff(), (pm - 2 * p0 + p1).cwiseAbs().maxCoeff());
    AxisInterval& iv = out[static_cast<std::size_t>(m)];
    if (curv > 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff())) {
      iv.affine = false;
      continue;
    }
    for (Eigen::Index mu = 0; mu <= N; ++mu) {
      // 0 <= p0 + g s <= 1
      const double c = p0(mu), d = g(mu);
      if (std::abs(d) < 1e-300) {
        if (c < -ProbabilityVectorField::kTolerance || c > 1 + ProbabilityVectorField::kTolerance) iv.lo = 1, iv.hi = 0;
        continue;
      }
      double s_a = (0.0 - c) / d, s_b = (1.0 - c) / d;
      if (s_a > s_b) std::swap(s_a, s_b);
      iv.lo = std::max(iv.lo, s_a * unit);
      iv.hi = std::min(iv.hi, s_b * unit);
    }
  }
  return out;
}

std::string describe_extent(const std::vector<AxisInterval>& ext) {
  std::ostringstream os;
  os << std::setprecision(10);
  for (std::size_t i = 0; i < ext.size(); ++i) {
    os << (i ? "; " : "") << "axis " << (i + 1) << ": ";
    const auto& iv = ext[i];
    if (!iv.affine)
      os << "no closed-form bound (drift not affine along this axis)";
    else if (iv.lo > iv.hi)
      os << "empty";
    else if (std::abs(iv.lo + iv.hi) <= 1e-12 * std::max(1.0, std::abs(iv.hi)))
      os << "|x| <= " << iv.hi;
    else
      os << iv.lo << " <= x <= " << iv.hi;
  }
  return os.str();
}

ProbabilityVectorField probabilities_from_drift(const DriftSpec& spec, const CoordinateChart& chart, const Grid& grid,
                                                const std::function<Eigen::VectorXd(std::size_t)>& point_of_site) {
  const std::size_t D = chart.D();
  std::vector<double> P(grid.size() * D);
  const double tol = ProbabilityVectorField::kTolerance;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    const Eigen::VectorXd point = point_of_site(s);
    const Eigen::VectorXd p = probabilities_at(spec, chart, point);
    for (std::size_t mu = 0; mu < D; ++mu) {
      const double v = p(static_cast<Eigen::Index>(mu));
      if (!(v >= -tol && v <= 1.0 + tol)) {
        std::ostringstream os;
        os << std::setprecision(10) << "transition probability P^" << mu << " = " << v
           << " outside [0,1] at physical point (" << point.transpose()
           << "); window too large for the drift. Admissible extent: "
           << describe_extent(admissible_extent(spec, chart));
        throw DomainViolation(os.str());
      }
      P[s * D + mu] = v;
    }
  }
  return ProbabilityVectorField::create(grid, D, std::move(P));
}

ProbabilityVectorField probabilities_from_drift(const DriftSpec& spec, const CoordinateChart& chart,
                                                const LatticeWindow& window) {
  if (window.dim() != chart.D()) throw DimensionError("window and chart dimensions differ");
  return probabilities_from_drift(spec, chart, window.grid(), [&](std::size_t s) {
    const Coord c = window.grid().coords(s);
    return chart.to_physical(std::span<const std::int64_t>(c));
  });
}

std::vector<double> drift_from_probabilities(const ProbabilityVectorField& X, const CoordinateChart& chart) {
  if (X.directions() != chart.D()) throw DimensionError("probability field does not match chart");
  const std::size_t N = chart.N();
  std::vector<double> R(X.grid().size() * N);
  for (std::size_t s = 0; s < X.grid().size(); ++s)
    for (std::size_t i = 1; i <= N; ++i) {
      double ap = 0.0;
      for (std::size_t mu = 0; mu < chart.D(); ++mu)
        ap += chart.A()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(mu)) * X.at(s, mu);
      R[s * N + i - 1] = chart.a()(static_cast<Eigen::Index>(i - 1)) / chart.b() * ap;
    }
  return R;
}

Eigen::MatrixXd diffusion_matrix(const CoordinateChart& chart) {
  const Eigen::Index N = static_cast<Eigen::Index>(chart.N());
  const Eigen::MatrixXd Ax = chart.A().bottomRows(N);
  const Eigen::VectorXd B0 = chart.B().col(0);
  Eigen::MatrixXd core = Ax * B0.asDiagonal() * Ax.transpose();
  return chart.h().cwiseProduct(core);
}

namespace {

// X(g) at one lattice image point: Σ_μ P^μ (g(p + d_μ) − g(p)).
double apply_at(const Eigen::VectorXd& P, const CoordinateChart& chart, const Eigen::VectorXd& point,
                const std::function<double(const Eigen::VectorXd&)>& g) {
  double acc = 0.0;
  const double g0 = g(point);
  for (std::size_t mu = 0; mu < chart.D(); ++mu)
    acc += P(static_cast<Eigen::Index>(mu)) * (g(point + chart.displacement(mu)) - g0);
  return acc;
}

}  // namespace

ContinuumCoefficients continuum_coefficients(const ScalingFamily& family, const DriftSpec& spec,
                                             const std::vector<double>& eps_grid,
                                             std::optional<Eigen::VectorXd> reference_point) {
  if (!is_strictly_decreasing(eps_grid)) throw ConfigError("eps grid must be strictly decreasing");
  ContinuumCoefficients out;
  out.R_hat = spec;
  out.eps = eps_grid;

  std::vector<Eigen::MatrixXd> hs;
  for (double eps : eps_grid) {
    const CoordinateChart chart = family.chart_at(eps);
    if (chart.N() != spec.N) throw DimensionError("family and drift have different spatial dimension");
    const Eigen::Index N = static_cast<Eigen::Index>(chart.N());
    hs.push_back(chart.h());
    out.eta_sequence.push_back(diffusion_matrix(chart));

    // Correlation route: X(x^i x^j) − x^i X(x^j) − x^j X(x^i) minus the squared mean drift, over b.
    const Eigen::VectorXd point = reference_point.value_or(Eigen::VectorXd::Zero(N + 1));
    if (!chart.site_of(point)) throw OffLattice("reference point is not a lattice image");
    const Eigen::VectorXd P = probabilities_at(spec, chart, point);
    const Eigen::VectorXd R = spec(point(0), point.tail(N));
    Eigen::MatrixXd H(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
      for (Eigen::Index j = 0; j < N; ++j) {
        auto xi = [i](const Eigen::VectorXd& p) { return p(i + 1); };
        auto xj = [j](const Eigen::VectorXd& p) { return p(j + 1); };
        auto xixj = [i, j](const Eigen::VectorXd& p) { return p(i + 1) * p(j + 1); };
        const double raw = apply_at(P, chart, point, xixj) - point(i + 1) * apply_at(P, chart, point, xj) -
                           point(j + 1) * apply_at(P, chart, point, xi);
        H(i, j) = (raw - chart.b() * chart.b() * R(i) * R(j)) / chart.b();
      }
    out.correlation_sequence.push_back(H);
  }

  const Extrapolation eta = richardson_limit(eps_grid, out.eta_sequence);
  if (!eta.converged) {
    std::ostringstream os;
    os << "diffusion matrix did not converge: relative change " << eta.relative_change
       << " between the two finest estimates";
    throw LimitNotFound(os.str());
  }
  const Extrapolation hl = richardson_limit(eps_grid, hs);
  if (!hl.converged) throw LimitNotFound("a_i a_j / b does not converge along the grid");
  out.eta_hat = eta.limit;
  out.h_limit = hl.limit;

  const Eigen::MatrixXd hatB = family.hat_B();
  out.P_hat = hatB.col(0);
  const double tol = 1e-12;
  if (out.P_hat.minCoeff() < -tol || std::abs(out.P_hat.sum() - 1.0) > tol)
    throw DomainViolation("limiting probabilities B̂^μ_0 do not form a distribution");
  const Eigen::Index N = out.eta_hat.rows();
  const Eigen::MatrixXd Ax = family.hat_A.bottomRows(N);
  out.eta_from_limit_chart = out.h_limit.cwiseProduct(Ax * out.P_hat.asDiagonal() * Ax.transpose());
  out.eta_from_correlation = out.correlation_sequence.back();
  out.discrepancy = (out.eta_hat - out.eta_from_correlation).cwiseAbs().maxCoeff();
  for (std::size_t k = 0; k < eps_grid.size(); ++k)
    out.fitted_C = std::max(out.fitted_C, (out.correlation_sequence[k] - out.eta_hat).cwiseAbs().maxCoeff() / eps_grid[k]);
  return out;
}

double zero_diagonal_row_residual(const Eigen::MatrixXd& eta, double tol) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < eta.rows(); ++i)
    if (std::abs(eta(i, i)) <= tol) worst = std::max(worst, eta.row(i).cwiseAbs().maxCoeff());
  return worst;
}

std::vector<LatticeOneForm> centered_forms(const LatticeWindow& w, const ProbabilityVectorField& X) {
  const LatticeOneForm rho = unit_form(w);
  std::vector<LatticeOneForm> out;
  for (std::size_t mu = 0; mu < w.dim(); ++mu) {
    std::vector<double> pmu(w.size());
    for (std::size_t s = 0; s < w.size(); ++s) pmu[s] = X.at(s, mu);
    out.push_back(subtract(coordinate_form(w, mu), scale(pmu, rho)));
  }
  return out;
}

KramersGauge kramers_gauge(const std::array<double, 6>& e) {
  const auto [ka, la, mu, kp, lp, mp] = e;
  KramersGauge g;
  g.entries = e;
  Eigen::Matrix3d A;
  A << 1, 1, 1, ka, la, mu, kp, lp, mp;
  g.det = A.determinant();
  if (std::abs(g.det) < 1e-14) throw SingularMatrix("gauge matrix is singular");
  g.p_hat = (la * mp - lp * mu) / g.det;
  g.q_hat = (kp * mu - ka * mp) / g.det;
  g.r_hat = (lp * ka - la * kp) / g.det;
  g.eta11 = ka * ka * g.p_hat + la * la * g.q_hat + mu * mu * g.r_hat;
  g.eta12 = ka * kp * g.p_hat + la * lp * g.q_hat + mu * mp * g.r_hat;
  g.eta22 = kp * kp * g.p_hat + lp * lp * g.q_hat + mp * mp * g.r_hat;
  return g;
}

namespace {

// Families indexed by the number of lattice directions that keep a positive
// limiting probability. η̂^{11}/h₁₁ = κ²p̂ + λ²q̂ + μ²r̂ is a sum of nonnegative
// terms, so it vanishes only if the x-row entry is zero on every such direction.
std::optional<KramersGaugeFamily> family_with_support(int k) {
  KramersGaugeFamily f;
  f.residual_gauge_dimension = 4;
  if (k == 3) return std::nullopt;  // whole x-row zero: singular chart
  if (k == 2) {
    // Zero probability on the middle direction: κ = μ = 0, λ ≠ 0, |A| = λ(μ′ − κ′).
    f.name = "Kramers";
    f.conditions = {"q̂ = 0", "κ = μ = 0", "p̂ = μ′/(μ′ − κ′)", "r̂ = κ′/(κ′ − μ′)"};
    f.free_parameters = {"λ", "λ′", "κ′", "μ′"};
    f.constraint = "κ′μ′ < 0, λ ≠ 0";
    f.eta22 = "η̂₂₂ = −h₂₂κ′μ′";
    f.entries = [](const std::array<double, 4>& p) { return std::array<double, 6>{0, p[0], 0, p[2], p[1], p[3]}; };
    f.admissible = [](const std::array<double, 4>& p) { return p[0] != 0 && p[2] * p[3] < 0; };
    return f;
  }
  // Single direction carries all probability (p̂ = 1): κ = 0, and q̂ = r̂ = 0
  // require κ′μ = 0 and λκ′ = 0; κ′ ≠ 0 would zero the x-row, so κ′ = 0.
  f.name = "Liouville";
  f.conditions = {"p̂ = 1", "q̂ = r̂ = 0", "κ = κ′ = 0"};
  f.free_parameters = {"λ", "μ", "λ′", "μ′"};
  f.constraint = "λμ′ − λ′μ ≠ 0";
  f.eta22 = "η̂₂₂ = 0";
  f.entries = [](const std::array<double, 4>& p) { return std::array<double, 6>{0, p[0], p[1], 0, p[2], p[3]}; };
  f.admissible = [](const std::array<double, 4>& p) { return std::abs(p[0] * p[3] - p[2] * p[1]) > 1e-14; };
  return f;
}

bool family_checks_out(const KramersGaugeFamily& f) {
  // Spot instances: admissible ones must be nonsingular with η̂^{11} = 0 and a valid distribution.
  const std::array<std::array<double, 4>, 4> samples{{{1, 0, 1, -1}, {2, -0.5, 0.3, -1.7}, {-1, 1.5, -2, 0.5}, {0.7, 0.2, 1.1, -0.4}}};
  for (const auto& s : samples) {
    if (!f.admissible(s)) continue;
    const KramersGauge g = kramers_gauge(f.entries(s));
    const double sum = g.p_hat + g.q_hat + g.r_hat;
    if (std::abs(g.eta11) > 1e-12 || std::abs(sum - 1) > 1e-12) return false;
    for (double p : {g.p_hat, g.q_hat, g.r_hat})
      if (p < -1e-12 || p > 1 + 1e-12) return false;
  }
  return true;
}

}  // namespace

std::vector<KramersGaugeFamily> kramers_gauge_solve() {
  std::vector<KramersGaugeFamily> out;
  for (int k = 1; k <= 3; ++k)
    if (auto f = family_with_support(k); f && family_checks_out(*f)) out.push_back(std::move(*f));
  return out;
}

namespace {

bool close(double a, double b, double rel = 1e-9) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1.0});
}

}  // namespace

GeneratorDescriptor limiting_generator(const ContinuumCoefficients& c) {
  GeneratorDescriptor g{"generalized Fokker-Planck", c.R_hat, c.eta_hat, {}};
  const std::size_t N = c.R_hat.N;
  const auto& R = c.R_hat;
  const std::vector<double> samples = {-1.3, -0.4, 0.0, 0.7, 1.9};
  const double rel = 1e-9;

  // Autonomous drifts only.
  for (double x : samples) {
    Eigen::VectorXd p = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(N), x);
    if (!(R(0.0, p) - R(1.0, p)).isZero(0.0)) return g;
  }

  if (N == 1) {
    const double eta = c.eta_hat(0, 0);
    if (!(eta > 0)) return g;
    auto r = [&](double x) { return R(0.0, Eigen::VectorXd::Constant(1, x))(0); };
    const double r0 = r(0.0);
    const double slope = r(1.0) - r0;
    bool constant = true, linear = true;
    for (double x : samples) {
      constant = constant && close(r(x), r0, rel);
      linear = linear && close(r(x), slope * x, rel);
    }
    if (constant && close(r0, 0.0, rel)) {
      g.tag = "heat";
    } else if (constant) {
      g.tag = "Smoluchowski (constant force)";
      g.parameters["gamma"] = -r0 / (2.0 * eta);
    } else if (linear && slope < 0) {
      g.tag = "Ornstein-Uhlenbeck";
      g.parameters["beta"] = -slope / 2.0;
    }
    g.parameters["h"] = eta;
    return g;
  }

  if (N == 2) {
    auto r = [&](double x, double y) {
      Eigen::VectorXd p(2);
      p << x, y;
      return R(0.0, p);
    };
    const double beta = -(r(0.0, 1.0)(1) - r(0.0, 0.0)(1));
    bool kinetic = true;
    for (double x : samples)
      for (double y : samples) {
        const Eigen::VectorXd v = r(x, y);
        kinetic = kinetic && close(v(0), y, rel) && close(v(1), r(x, 0.0)(1) - beta * y, rel);
      }
    const double scale = std::max(c.eta_hat.cwiseAbs().maxCoeff(), 1.0);
    const bool x_deterministic = std::abs(c.eta_hat(0, 0)) <= rel * scale && std::abs(c.eta_hat(0, 1)) <= rel * scale;
    if (kinetic && x_deterministic) {
      g.parameters["beta"] = beta;
      if (std::abs(c.eta_hat(1, 1)) <= rel * scale) {
        g.tag = "Liouville with friction";
      } else if (c.eta_hat(1, 1) > 0) {
        g.tag = "Kramers";
        g.parameters["h22"] = c.eta_hat(1, 1);
      }
    }
  }
  return g;
}

}  // namespace latkin
