#include "latkin/charts.hpp"

#include <cmath>
#include <sstream>

#include "latkin/errors.hpp"
#include "latkin/numerics.hpp"

namespace latkin {

namespace {

Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& A, const char* what) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw SingularMatrix(std::string(what) + " is singular");
  Eigen::MatrixXd B = lu.inverse();
  const double err = (A * B - Eigen::MatrixXd::Identity(A.rows(), A.cols())).cwiseAbs().maxCoeff();
  if (err > 1e-9) throw SingularMatrix(std::string(what) + " is numerically singular");
  return B;
}

}  // namespace

CoordinateChart::CoordinateChart(Eigen::MatrixXd A, Eigen::VectorXd a, double b)
    : A_(std::move(A)), a_(std::move(a)), b_(b) {
  const auto D = a_.size() + 1;
  if (a_.size() < 1) throw DimensionError("chart needs N >= 1");
  if (A_.rows() != D || A_.cols() != D) throw DimensionError("chart matrix must be (N+1)x(N+1)");
  if (!(b_ > 0)) throw ConfigError("chart time step b must be positive");
  for (Eigen::Index i = 0; i < a_.size(); ++i)
    if (!(a_(i) > 0)) throw ConfigError("chart scalings a_i must be positive");
  for (Eigen::Index mu = 0; mu < D; ++mu)
    if (A_(0, mu) != 1.0) throw ConfigError("first row of the chart matrix must be all ones");
  B_ = checked_inverse(A_, "chart matrix");
}

Eigen::VectorXd CoordinateChart::scalings() const {
  Eigen::VectorXd s(D());
  s(0) = -b_;
  s.tail(N()) = a_;
  return s;
}

Eigen::MatrixXd CoordinateChart::h() const { return a_ * a_.transpose() / b_; }

Eigen::VectorXd CoordinateChart::to_physical(const Eigen::VectorXd& u) const {
  return scalings().cwiseProduct(A_ * u);
}

Eigen::VectorXd CoordinateChart::to_physical(std::span<const std::int64_t> u) const {
  Eigen::VectorXd v(D());
  for (std::size_t k = 0; k < D(); ++k) v(static_cast<Eigen::Index>(k)) = static_cast<double>(u[k]);
  return to_physical(v);
}

Eigen::VectorXd CoordinateChart::to_lattice(const Eigen::VectorXd& x) const {
  return B_ * x.cwiseQuotient(scalings());
}

Eigen::VectorXd CoordinateChart::displacement(std::size_t mu) const {
  return scalings().cwiseProduct(A_.col(static_cast<Eigen::Index>(mu)));
}

std::optional<Coord> CoordinateChart::site_of(const Eigen::VectorXd& x, double tol) const {
  if (static_cast<std::size_t>(x.size()) != D()) throw DimensionError("point has wrong dimension for chart");
  const Eigen::VectorXd u = to_lattice(x);
  Coord c(D());
  for (std::size_t k = 0; k < D(); ++k) {
    const double r = std::round(u(static_cast<Eigen::Index>(k)));
    if (std::abs(u(static_cast<Eigen::Index>(k)) - r) > tol) return std::nullopt;
    c[k] = static_cast<std::int64_t>(r);
  }
  return c;
}

Eigen::MatrixXd lightcone_matrix() {
  Eigen::MatrixXd A(2, 2);
  A << 1, 1, 1, -1;
  return A;
}

Eigen::MatrixXd sign_flip_matrix(std::size_t N) {
  const auto D = static_cast<Eigen::Index>(N + 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Ones(D, D);
  for (Eigen::Index i = 1; i < D; ++i) A(i, i) = -1.0;
  return A;
}

Eigen::MatrixXd simplex_matrix(std::size_t N) {
  // Helmert basis of the sum-zero hyperplane, scaled by √(N+1).
  const auto D = static_cast<Eigen::Index>(N + 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(D, D);
  A.row(0).setOnes();
  const double s = std::sqrt(static_cast<double>(N + 1));
  for (Eigen::Index k = 1; k < D; ++k) {
    const double norm = std::sqrt(static_cast<double>(k * (k + 1)));
    for (Eigen::Index mu = 0; mu < k; ++mu) A(k, mu) = s / norm;
    A(k, k) = -s * static_cast<double>(k) / norm;
  }
  return A;
}

CoordinateChart make_lightcone_chart_1d(double a, double b) {
  return CoordinateChart(lightcone_matrix(), Eigen::VectorXd::Constant(1, a), b);
}

CoordinateChart make_sign_flip_chart(const Eigen::VectorXd& a, double b) {
  return CoordinateChart(sign_flip_matrix(static_cast<std::size_t>(a.size())), a, b);
}

CoordinateChart make_simplex_chart(const Eigen::VectorXd& a, double b) {
  return CoordinateChart(simplex_matrix(static_cast<std::size_t>(a.size())), a, b);
}

CoordinateChart make_kramers_chart(const std::array<double, 6>& e, double a, double abar, double b) {
  Eigen::MatrixXd A(3, 3);
  A << 1, 1, 1, e[0], e[1], e[2], e[3], e[4], e[5];
  Eigen::VectorXd s(2);
  s << a, abar;
  return CoordinateChart(A, s, b);
}

Eigen::MatrixXd ScalingFamily::hat_B() const { return checked_inverse(hat_A, "limit chart matrix"); }

ScalingFamily standard_family(const std::string& name, const Eigen::MatrixXd& A, const Eigen::VectorXd& h_diag) {
  if (A.rows() != h_diag.size() + 1) throw DimensionError("one diffusion scale per spatial axis required");
  for (Eigen::Index i = 0; i < h_diag.size(); ++i)
    if (!(h_diag(i) > 0)) throw ConfigError("diffusion scales h_ii must be positive");
  const Eigen::VectorXd root = h_diag.cwiseSqrt();
  return ScalingFamily{name, [A, root](double eps) { return CoordinateChart(A, root * eps, eps * eps); }, A};
}

CommutationTable chart_commutation_relations(const CoordinateChart& chart) {
  const std::size_t D = chart.D();
  const Eigen::VectorXd s = chart.scalings();
  const Eigen::MatrixXd& A = chart.A();
  const Eigen::MatrixXd& B = chart.B();
  CommutationTable t{D, std::vector<double>(D * D * D, 0.0)};
  for (std::size_t mu = 0; mu < D; ++mu)
    for (std::size_t nu = 0; nu < D; ++nu)
      for (std::size_t la = 0; la < D; ++la) {
        double acc = 0.0;
        for (std::size_t k = 0; k < D; ++k) {
          const auto K = static_cast<Eigen::Index>(k);
          acc += A(static_cast<Eigen::Index>(mu), K) * A(static_cast<Eigen::Index>(nu), K) *
                 B(K, static_cast<Eigen::Index>(la));
        }
        t.coeff[(mu * D + nu) * D + la] =
            s(static_cast<Eigen::Index>(mu)) * s(static_cast<Eigen::Index>(nu)) / s(static_cast<Eigen::Index>(la)) * acc;
      }
  return t;
}

CommutationTable limiting_commutation_table(const ScalingFamily& family, const std::vector<double>& eps_grid) {
  if (!is_strictly_decreasing(eps_grid)) throw ConfigError("eps grid must be strictly decreasing");
  std::vector<Eigen::MatrixXd> neg_eta;
  std::vector<double> b_over_a;
  std::size_t D = 0;
  for (double eps : eps_grid) {
    const CoordinateChart c = family.chart_at(eps);
    D = c.D();
    const CommutationTable t = chart_commutation_relations(c);
    Eigen::MatrixXd m(D - 1, D - 1);
    for (std::size_t i = 1; i < D; ++i)
      for (std::size_t j = 1; j < D; ++j) m(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1)) = t(i, j, 0);
    neg_eta.push_back(m);
    b_over_a.push_back(c.b() / c.a().minCoeff());
  }
  for (std::size_t k = 1; k < b_over_a.size(); ++k)
    if (!(b_over_a[k] < b_over_a[k - 1]))
      throw LimitNotFound("a_m/b does not grow along the grid; the spatial commutators do not vanish");
  const Extrapolation ex = richardson_limit(eps_grid, neg_eta);
  if (!ex.converged) {
    std::ostringstream os;
    os << "diffusion coefficients did not settle (relative change " << ex.relative_change << ")";
    throw LimitNotFound(os.str());
  }
  CommutationTable out{D, std::vector<double>(D * D * D, 0.0)};
  for (std::size_t i = 1; i < D; ++i)
    for (std::size_t j = 1; j < D; ++j)
      out.coeff[(i * D + j) * D + 0] = ex.limit(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1));
  return out;
}

void DifferenceOperators::require_on_lattice(const Eigen::VectorXd& p) const {
  if (!chart_.site_of(p)) {
    std::ostringstream os;
    os << "point (" << p.transpose() << ") is not the image of a lattice site";
    throw OffLattice(os.str());
  }
}

double DifferenceOperators::stencil(const PhysicalFunction& f, const Eigen::VectorXd& p, std::size_t column) const {
  double acc = 0.0;
  for (std::size_t mu = 0; mu < chart_.D(); ++mu)
    acc += f(p + chart_.displacement(mu)) * chart_.B()(static_cast<Eigen::Index>(mu), static_cast<Eigen::Index>(column));
  return acc;
}

double DifferenceOperators::bar_partial(std::size_t i, const PhysicalFunction& f, const Eigen::VectorXd& p) const {
  if (i < 1 || i > chart_.N()) throw DimensionError("bar_partial: spatial axis out of range");
  require_on_lattice(p);
  return stencil(f, p, i) / chart_.a()(static_cast<Eigen::Index>(i - 1));
}

double DifferenceOperators::laplacian(const PhysicalFunction& f, const Eigen::VectorXd& p) const {
  require_on_lattice(p);
  Eigen::VectorXd below = p;
  below(0) -= chart_.b();
  return 2.0 / chart_.b() * (stencil(f, p, 0) - f(below));
}

double DifferenceOperators::minus_t(const PhysicalFunction& f, const Eigen::VectorXd& p) const {
  require_on_lattice(p);
  Eigen::VectorXd below = p;
  below(0) -= chart_.b();
  return (f(p) - f(below)) / chart_.b();
}

Eigen::VectorXd DifferenceOperators::differential(const PhysicalFunction& f, const Eigen::VectorXd& p) const {
  Eigen::VectorXd c(chart_.D());
  c(0) = minus_t(f, p) - 0.5 * laplacian(f, p);
  for (std::size_t i = 1; i < chart_.D(); ++i) c(static_cast<Eigen::Index>(i)) = bar_partial(i, f, p);
  return c;
}

Eigen::VectorXd sign_flip_expansion(const CoordinateChart& chart, const PhysicalFunction& f, const Eigen::VectorXd& p) {
  const std::size_t N = chart.N();
  if ((chart.A() - sign_flip_matrix(N)).cwiseAbs().maxCoeff() != 0.0)
    throw UnsupportedInput("sign_flip_expansion needs the sign-flip chart");
  if (!chart.site_of(p)) throw OffLattice("sign_flip_expansion: point is not a lattice image");
  const double b = chart.b();
  const Eigen::VectorXd& a = chart.a();
  auto e = [&](std::size_t i) {  // a_i along spatial axis i (1-based), zero time part
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N + 1));
    v(static_cast<Eigen::Index>(i)) = a(static_cast<Eigen::Index>(i - 1));
    return v;
  };
  // y = (t − b, x + a): image of u + 0̂
  Eigen::VectorXd y = p;
  y(0) -= b;
  y.tail(static_cast<Eigen::Index>(N)) += a;

  Eigen::VectorXd below = p;
  below(0) -= b;
  double ct = (f(p) - f(below)) / b;
  for (std::size_t i = 1; i <= N; ++i) {
    const Eigen::VectorXd c = y - e(i);
    const double ai = a(static_cast<Eigen::Index>(i - 1));
    const double second = (f(c + e(i)) + f(c - e(i)) - 2.0 * f(c)) / (ai * ai);
    ct -= ai * ai / (2.0 * b) * second;
  }
  for (std::size_t i = 1; i <= N; ++i)
    for (std::size_t j = i + 1; j <= N; ++j) {
      Eigen::VectorXd q = y;
      for (std::size_t k = i; k <= j; ++k) q -= e(k);
      const double ai = a(static_cast<Eigen::Index>(i - 1));
      const double aj = a(static_cast<Eigen::Index>(j - 1));
      const double mixed = (f(q + e(i) + e(j)) - f(q + e(i)) - f(q + e(j)) + f(q)) / (ai * aj);
      ct += ai * aj / b * mixed;
    }
  Eigen::VectorXd out(static_cast<Eigen::Index>(N + 1));
  out(0) = ct;
  for (std::size_t i = 1; i <= N; ++i) {
    const Eigen::VectorXd c = y - e(i);
    out(static_cast<Eigen::Index>(i)) = (f(c + e(i)) - f(c - e(i))) / (2.0 * a(static_cast<Eigen::Index>(i - 1)));
  }
  return out;
}

ChartTransform::ChartTransform(Eigen::MatrixXd Lambda) : L_(std::move(Lambda)) {
  if (L_.rows() != L_.cols() || L_.rows() < 2) throw DimensionError("transform must be square, size >= 2");
  if (L_(0, 0) != 1.0) throw ConfigError("transform must leave t fixed (Λ⁰_0 = 1)");
  for (Eigen::Index j = 1; j < L_.cols(); ++j)
    if (L_(0, j) != 0.0) throw ConfigError("transform must leave t fixed (Λ⁰_j = 0)");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(L_);
  if (!lu.isInvertible()) throw SingularMatrix("transform is singular");
}

CoordinateChart apply_transform(const ChartTransform& L, const CoordinateChart& chart) {
  if (static_cast<std::size_t>(L.Lambda().rows()) != chart.D()) throw DimensionError("transform size differs from chart");
  const Eigen::VectorXd s = chart.scalings();
  Eigen::MatrixXd A = s.cwiseInverse().asDiagonal() * L.Lambda() * s.asDiagonal() * chart.A();
  A.row(0).setOnes();  // exact: Λ leaves the time row untouched
  return CoordinateChart(A, chart.a(), chart.b());
}

Eigen::MatrixXd transported_correlation(const CoordinateChart& chart, const Eigen::VectorXd& p) {
  if (static_cast<std::size_t>(p.size()) != chart.D()) throw DimensionError("probabilities do not match chart");
  const Eigen::MatrixXd P = Eigen::MatrixXd(p.asDiagonal()) - p * p.transpose();
  const Eigen::MatrixXd DA = chart.scalings().asDiagonal() * chart.A();
  return DA * P * DA.transpose();
}

Eigen::MatrixXd transform_correlation(const ChartTransform& L, const Eigen::MatrixXd& H) {
  return L.Lambda() * H * L.Lambda().transpose();
}

ChartTransform diagonalizing_gauge(const Eigen::MatrixXd& H) {
  const Eigen::Index D = H.rows();
  if (H.cols() != D || D < 2) throw DimensionError("correlation matrix must be square");
  const Eigen::MatrixXd S = H.bottomRightCorner(D - 1, D - 1);
  const Eigen::MatrixXd off = S - Eigen::MatrixXd(S.diagonal().asDiagonal());
  const double scale = std::max(S.cwiseAbs().maxCoeff(), 1e-300);
  if (off.cwiseAbs().maxCoeff() <= 1e-12 * scale) return ChartTransform::identity(static_cast<std::size_t>(D));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
  Eigen::MatrixXd V = es.eigenvectors().rowwise().reverse();  // descending eigenvalues
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(D, D);
  L.bottomRightCorner(D - 1, D - 1) = V.transpose();
  return ChartTransform(L);
}

ChartTransform diagonalizing_gauge(const CoordinateChart& chart, const ProbabilityVectorField& X) {
  if (X.directions() != chart.D()) throw DimensionError("probability field does not match chart");
  const auto first = X.site(0);
  for (std::size_t s = 1; s < X.grid().size(); ++s) {
    const auto ps = X.site(s);
    for (std::size_t mu = 0; mu < X.directions(); ++mu)
      if (std::abs(ps[mu] - first[mu]) > 1e-12)
        throw UnsupportedInput("diagonalizing_gauge needs a spatially constant correlation matrix");
  }
  Eigen::VectorXd p(static_cast<Eigen::Index>(X.directions()));
  for (std::size_t mu = 0; mu < X.directions(); ++mu) p(static_cast<Eigen::Index>(mu)) = first[mu];
  return diagonalizing_gauge(transported_correlation(chart, p));
}

}  // namespace latkin
