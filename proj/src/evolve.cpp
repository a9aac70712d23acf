#include "latkin/evolve.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>

#include "latkin/errors.hpp"
#include "latkin/numerics.hpp"
#include "latkin/parallel.hpp"

namespace latkin {

namespace {

constexpr std::size_t kMaxDim = 16;
using CoordBuf = std::array<std::int64_t, kMaxDim>;

void require_dim(std::size_t N) {
  if (N == 0 || N > kMaxDim) throw UnsupportedInput("slices support 1.." + std::to_string(kMaxDim) + " spatial axes");
}

std::size_t offset_in(const Grid& g, const std::int64_t* v) {
  std::size_t idx = 0;
  for (std::size_t j = 0; j < g.dim(); ++j) idx += static_cast<std::size_t>(v[j] - g.lo()[j]) * g.stride(j);
  return idx;
}

bool inside(const Grid& g, const std::int64_t* v) {
  for (std::size_t j = 0; j < g.dim(); ++j)
    if (v[j] < g.lo()[j] || v[j] > g.hi()[j]) return false;
  return true;
}

bool box_within(const Box& inner, const Grid& outer) {
  return outer.contains(inner.lo) && outer.contains(inner.hi);
}

std::string coord_str(std::span<const std::int64_t> v) {
  std::ostringstream os;
  os << "(";
  for (std::size_t j = 0; j < v.size(); ++j) os << (j ? "," : "") << v[j];
  os << ")";
  return os.str();
}

}  // namespace

bool PhysicalBox::contains(const Eigen::VectorXd& x, double tol) const {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double slack = tol * std::max({1.0, std::abs(lo(i)), std::abs(hi(i))});
    if (x(i) < lo(i) - slack || x(i) > hi(i) + slack) return false;
  }
  return true;
}

SliceGeometry::SliceGeometry(const CoordinateChart& chart) : N_(chart.N()) {
  require_dim(N_);
  const auto n = static_cast<Eigen::Index>(N_);
  const Eigen::MatrixXd Ax = chart.A().bottomRows(n);
  a_ = chart.a();
  c_ = Ax.col(0);
  M_ = Ax.rightCols(n) - c_ * Eigen::RowVectorXd::Ones(n);
  Minv_ = M_.inverse();
}

void SliceGeometry::position(std::int64_t layer, std::span<const std::int64_t> v, double* out) const {
  for (std::size_t i = 0; i < N_; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double acc = c_(ii) * static_cast<double>(layer);
    for (std::size_t j = 0; j < N_; ++j) acc += M_(ii, static_cast<Eigen::Index>(j)) * static_cast<double>(v[j]);
    out[i] = a_(ii) * acc;
  }
}

Eigen::VectorXd SliceGeometry::position(std::int64_t layer, std::span<const std::int64_t> v) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(N_));
  position(layer, v, x.data());
  return x;
}

Eigen::VectorXd SliceGeometry::slice_coordinates(std::int64_t layer, const Eigen::VectorXd& x) const {
  return Minv_ * (x.cwiseQuotient(a_) - c_ * static_cast<double>(layer));
}

Box SliceGeometry::cover(const PhysicalBox& box, std::int64_t layer) const {
  const auto n = static_cast<Eigen::Index>(N_);
  if (box.lo.size() != n || box.hi.size() != n) throw DimensionError("physical box has wrong dimension");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(box.lo(i) <= box.hi(i))) throw ConfigError("physical box has lo > hi");
  Eigen::VectorXd vmin = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::VectorXd vmax = -vmin;
  for (std::size_t corner = 0; corner < (std::size_t{1} << N_); ++corner) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = (corner >> i) & 1 ? box.hi(i) : box.lo(i);
    const Eigen::VectorXd v = slice_coordinates(layer, x);
    vmin = vmin.cwiseMin(v);
    vmax = vmax.cwiseMax(v);
  }
  Box out{Coord(N_), Coord(N_)};
  for (std::size_t j = 0; j < N_; ++j) {
    out.lo[j] = static_cast<std::int64_t>(std::floor(vmin(static_cast<Eigen::Index>(j)) + 1e-9));
    out.hi[j] = static_cast<std::int64_t>(std::ceil(vmax(static_cast<Eigen::Index>(j)) - 1e-9));
  }
  return out;
}

Slice step_observable(const Slice& s, const ProbabilityVectorField& X, const CoordinateChart& chart, int jobs) {
  const std::size_t N = s.grid.dim();
  require_dim(N);
  if (N != chart.N() || X.directions() != chart.D() || X.grid().dim() != N)
    throw DimensionError("slice, probability field and chart disagree on dimension");
  Box out_box = s.valid;
  for (auto& h : out_box.hi) --h;
  if (s.valid.empty() || out_box.empty()) {
    std::ostringstream os;
    os << "evolution exhausted: no valid sites remain; last valid slice at layer " << s.layer << ", t = " << s.t
       << ", valid region " << s.valid.str();
    throw EvolutionExhausted(os.str());
  }
  if (!box_within(out_box, X.grid())) throw DimensionError("probability field does not cover the output slice");

  Slice out;
  out.grid = Grid(out_box.lo, out_box.hi);
  out.values.assign(out.grid.size(), 0.0);
  out.valid = out.grid.box();
  out.layer = s.layer - 1;
  out.t = s.t + chart.b();
  out.flushed = s.flushed;

  const std::size_t D = chart.D();
  const bool same_grid = X.grid() == out.grid;
  const double* f = s.values.data();
  const double* P = X.data().data();
  parallel_for(out.grid.size(), jobs, [&](std::size_t k) {
    CoordBuf v;
    out.grid.coords(k, std::span<std::int64_t>(v.data(), N));
    const std::size_t base = offset_in(s.grid, v.data());
    const std::size_t xi = same_grid ? k : offset_in(X.grid(), v.data());
    double acc = P[xi * D] * f[base];
    for (std::size_t i = 1; i < D; ++i) acc += P[xi * D + i] * f[base + s.grid.stride(i - 1)];
    out.values[k] = acc;
  });
  return out;
}

Slice step_distribution(const Slice& s, const ProbabilityVectorField& X, const CoordinateChart& chart, int jobs,
                        double flush_threshold) {
  const std::size_t N = s.grid.dim();
  require_dim(N);
  if (N != chart.N() || X.directions() != chart.D() || X.grid().dim() != N)
    throw DimensionError("slice, probability field and chart disagree on dimension");
  const bool same_grid = X.grid() == s.grid;
  if (!same_grid) {
    CoordBuf v;
    for (std::size_t k = 0; k < s.grid.size(); ++k) {
      if (s.values[k] == 0.0) continue;
      s.grid.coords(k, std::span<std::int64_t>(v.data(), N));
      if (!inside(X.grid(), v.data()))
        throw DimensionError("probability field does not cover site " +
                             coord_str(std::span<const std::int64_t>(v.data(), N)) + " which carries mass");
    }
  }

  Coord hi = s.grid.hi();
  for (auto& h : hi) ++h;
  Slice out;
  out.grid = Grid(s.grid.lo(), hi);
  out.values.assign(out.grid.size(), 0.0);
  out.valid = out.grid.box();
  out.layer = s.layer + 1;
  out.t = s.t + chart.b();
  out.flushed = s.flushed;

  const std::size_t D = chart.D();
  const double* sigma = s.values.data();
  const double* P = X.data().data();
  const Grid& g = s.grid;
  parallel_for(out.grid.size(), jobs, [&](std::size_t k) {
    CoordBuf v;
    out.grid.coords(k, std::span<std::int64_t>(v.data(), N));
    double acc = 0.0;
    bool own = true;  // v itself inside the input grid
    for (std::size_t j = 0; j < N; ++j) own = own && v[j] <= g.hi()[j];
    if (own) {
      const std::size_t idx = offset_in(g, v.data());
      if (sigma[idx] != 0.0) {
        const std::size_t xi = same_grid ? idx : offset_in(X.grid(), v.data());
        acc += P[xi * D] * sigma[idx];
      }
    }
    for (std::size_t i = 0; i < N; ++i) {
      --v[i];
      if (inside(g, v.data())) {
        const std::size_t idx = offset_in(g, v.data());
        if (sigma[idx] != 0.0) {
          const std::size_t xi = same_grid ? idx : offset_in(X.grid(), v.data());
          acc += P[xi * D + i + 1] * sigma[idx];
        }
      }
      ++v[i];
    }
    out.values[k] = acc;
  });

  if (flush_threshold > 0.0) {
    for (double& x : out.values)
      if (x != 0.0 && std::abs(x) < flush_threshold) {
        out.flushed += std::abs(x);
        x = 0.0;
      }
  }
  return out;
}

ProbabilityVectorField slice_probabilities(const DriftSpec& spec, const CoordinateChart& chart, const Grid& grid,
                                           std::int64_t layer, const std::vector<double>* occupancy, int jobs) {
  const std::size_t N = chart.N();
  const std::size_t D = chart.D();
  if (grid.dim() != N || spec.N != N) throw DimensionError("grid, drift and chart disagree on dimension");
  if (occupancy && occupancy->size() != grid.size()) throw DimensionError("occupancy does not match grid");
  const SliceGeometry geom(chart);
  std::vector<double> P(grid.size() * D, 0.0);

  // Affine drifts give P affine in v: P = p0 + G v.
  Eigen::VectorXd p0;
  Eigen::MatrixXd G;
  if (spec.affine) {
    const auto n = static_cast<Eigen::Index>(N);
    const Eigen::VectorXd ba = Eigen::VectorXd::Constant(n, chart.b()).cwiseQuotient(chart.a());
    CoordBuf zero{};
    const Eigen::VectorXd x0 = geom.position(layer, std::span<const std::int64_t>(zero.data(), N));
    Eigen::VectorXd target(n + 1);
    target(0) = 1.0;
    target.tail(n) = ba.cwiseProduct(spec.affine->R0 + spec.affine->J * x0);
    p0 = chart.B() * target;
    Eigen::MatrixXd dx(n, n);  // ∂x/∂v
    for (Eigen::Index j = 0; j < n; ++j) {
      CoordBuf e{};
      e[static_cast<std::size_t>(j)] = 1;
      dx.col(j) = geom.position(layer, std::span<const std::int64_t>(e.data(), N)) - x0;
    }
    G = chart.B().rightCols(n) * ba.asDiagonal() * spec.affine->J * dx;
  }

  parallel_for(grid.size(), jobs, [&](std::size_t k) {
    double* out = P.data() + k * D;
    if (occupancy && (*occupancy)[k] == 0.0) {
      out[0] = 1.0;
      return;
    }
    CoordBuf v;
    grid.coords(k, std::span<std::int64_t>(v.data(), N));
    if (spec.affine) {
      for (std::size_t mu = 0; mu < D; ++mu) {
        double acc = p0(static_cast<Eigen::Index>(mu));
        for (std::size_t j = 0; j < N; ++j)
          acc += G(static_cast<Eigen::Index>(mu), static_cast<Eigen::Index>(j)) * static_cast<double>(v[j]);
        out[mu] = acc;
      }
    } else {
      Eigen::VectorXd point(static_cast<Eigen::Index>(D));
      point(0) = -chart.b() * static_cast<double>(layer);
      geom.position(layer, std::span<const std::int64_t>(v.data(), N), point.data() + 1);
      const Eigen::VectorXd p = probabilities_at(spec, chart, point);
      for (std::size_t mu = 0; mu < D; ++mu) out[mu] = p(static_cast<Eigen::Index>(mu));
    }
  });

  const double tol = ProbabilityVectorField::kTolerance;
  for (std::size_t k = 0; k < grid.size(); ++k)
    for (std::size_t mu = 0; mu < D; ++mu) {
      const double p = P[k * D + mu];
      if (p >= -tol && p <= 1.0 + tol) continue;
      CoordBuf v;
      grid.coords(k, std::span<std::int64_t>(v.data(), N));
      std::ostringstream os;
      os.precision(10);
      os << "transition probability P^" << mu << " = " << p << " outside [0,1] at x = ("
         << geom.position(layer, std::span<const std::int64_t>(v.data(), N)).transpose()
         << "); the window is too large for this drift. Admissible extent: "
         << describe_extent(admissible_extent(spec, chart));
      throw DomainViolation(os.str());
    }
  return ProbabilityVectorField::create(grid, D, std::move(P));
}

DeltaStart delta_slice(const CoordinateChart& chart, const Eigen::VectorXd& x0, std::int64_t layer) {
  const SliceGeometry geom(chart);
  if (static_cast<std::size_t>(x0.size()) != chart.N()) throw DimensionError("start point has wrong dimension");
  const Eigen::VectorXd v = geom.slice_coordinates(layer, x0);
  Coord c(chart.N());
  for (std::size_t j = 0; j < c.size(); ++j) c[j] = std::llround(v(static_cast<Eigen::Index>(j)));
  DeltaStart d;
  d.slice.grid = Grid(c, c);
  d.slice.values = {1.0};
  d.slice.valid = d.slice.grid.box();
  d.slice.layer = layer;
  d.position = geom.position(layer, c);
  return d;
}

Slice gaussian_distribution(const CoordinateChart& chart, const Eigen::VectorXd& mean, const Eigen::VectorXd& sd,
                            const PhysicalBox& window, std::int64_t layer) {
  const SliceGeometry geom(chart);
  const Box b = geom.cover(window, layer);
  Slice s;
  s.grid = Grid(b.lo, b.hi);
  s.values.assign(s.grid.size(), 0.0);
  s.valid = s.grid.box();
  s.layer = layer;
  double total = 0.0;
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    const Eigen::VectorXd x = geom.position(layer, s.grid.coords(k));
    if (!window.contains(x)) continue;
    double e = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) e += std::pow((x(i) - mean(i)) / sd(i), 2);
    s.values[k] = std::exp(-0.5 * e);
    total += s.values[k];
  }
  if (!(total > 0.0)) throw ConfigError("gaussian start has no mass on lattice images inside the window");
  for (double& v : s.values) v /= total;
  return trim_to_support(s);
}

Slice observable_slice(const CoordinateChart& chart, const std::function<double(const Eigen::VectorXd&)>& f,
                       const PhysicalBox& window, std::size_t steps) {
  const SliceGeometry geom(chart);
  Box b = geom.cover(window, 0);
  for (auto& h : b.hi) h += static_cast<std::int64_t>(steps);
  Slice s;
  s.grid = Grid(b.lo, b.hi);
  s.values.resize(s.grid.size());
  s.valid = s.grid.box();
  s.layer = static_cast<std::int64_t>(steps);
  for (std::size_t k = 0; k < s.grid.size(); ++k) s.values[k] = f(geom.position(s.layer, s.grid.coords(k)));
  return s;
}

Slice trim_to_support(const Slice& s) {
  const std::size_t N = s.grid.dim();
  Coord lo(N, std::numeric_limits<std::int64_t>::max()), hi(N, std::numeric_limits<std::int64_t>::min());
  Coord v(N);
  bool any = false;
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    if (s.values[k] == 0.0) continue;
    any = true;
    s.grid.coords(k, v);
    for (std::size_t j = 0; j < N; ++j) {
      lo[j] = std::min(lo[j], v[j]);
      hi[j] = std::max(hi[j], v[j]);
    }
  }
  if (!any) lo = hi = s.grid.lo();
  if (lo == s.grid.lo() && hi == s.grid.hi()) {
    Slice out = s;
    out.valid = out.grid.box();
    return out;
  }
  Slice out = s;
  out.grid = Grid(lo, hi);
  out.values.assign(out.grid.size(), 0.0);
  out.valid = out.grid.box();
  for (std::size_t k = 0; k < out.grid.size(); ++k) {
    out.grid.coords(k, v);
    out.values[k] = s.values[s.grid.index(v)];
  }
  return out;
}

MomentRow slice_moments(const Slice& s, const SliceGeometry& geom) {
  const std::size_t N = geom.N();
  MomentRow row;
  row.t = s.t;
  row.mean.assign(N, 0.0);
  row.cov.assign(N * (N + 1) / 2, 0.0);
  row.min = std::numeric_limits<double>::infinity();
  row.max = -row.min;
  if (s.valid.empty()) return row;

  const Grid vg(s.valid.lo, s.valid.hi);
  std::vector<double> w(vg.size()), x(vg.size() * N);
  Coord v(N);
  for (std::size_t k = 0; k < vg.size(); ++k) {
    vg.coords(k, v);
    w[k] = s.values[s.grid.index(v)];
    geom.position(s.layer, v, x.data() + k * N);
  }
  for (std::size_t k = 0; k < vg.size(); ++k) {
    row.mass += w[k];
    row.min = std::min(row.min, w[k]);
    row.max = std::max(row.max, w[k]);
    for (std::size_t i = 0; i < N; ++i) row.mean[i] += w[k] * x[k * N + i];
  }
  if (row.mass == 0.0) return row;
  for (double& m : row.mean) m /= row.mass;
  for (std::size_t k = 0; k < vg.size(); ++k) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i; j < N; ++j)
        row.cov[c++] += w[k] * (x[k * N + i] - row.mean[i]) * (x[k * N + j] - row.mean[j]);
  }
  for (double& c : row.cov) c /= row.mass;
  return row;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> MomentReport::header() const {
  std::vector<std::string> h{"t", "mass"};
  for (std::size_t i = 1; i <= N; ++i) h.push_back("mean_x" + std::to_string(i));
  for (std::size_t i = 1; i <= N; ++i)
    for (std::size_t j = i; j <= N; ++j) h.push_back("cov_" + std::to_string(i) + "_" + std::to_string(j));
  h.push_back("min");
  h.push_back("max");
  return h;
}

std::string MomentReport::csv() const {
  std::ostringstream os;
  const auto h = header();
  for (std::size_t k = 0; k < h.size(); ++k) os << (k ? "," : "") << h[k];
  os << "\n";
  for (const auto& r : rows) {
    os << format_double(r.t) << "," << format_double(r.mass);
    for (double m : r.mean) os << "," << format_double(m);
    for (double c : r.cov) os << "," << format_double(c);
    os << "," << format_double(r.min) << "," << format_double(r.max) << "\n";
  }
  return os.str();
}

namespace {

using Provider = std::function<ProbabilityVectorField(const Grid&, std::int64_t, const std::vector<double>*)>;

void check_window(const Slice& s, const SliceGeometry& geom, const PhysicalBox& window, long step) {
  Coord v(geom.N());
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    if (s.values[k] == 0.0) continue;
    s.grid.coords(k, v);
    const Eigen::VectorXd x = geom.position(s.layer, v);
    if (!window.contains(x)) {
      std::ostringstream os;
      os << "distribution reached the window boundary at step " << step << " (mass " << s.values[k]
         << " at x = (" << x.transpose() << "))";
      throw BoundaryReached(os.str(), step);
    }
  }
}

MomentReport run(Slice cur, const Provider& provider, const CoordinateChart& chart, const RunOptions& opt) {
  if (cur.grid.dim() != chart.N()) throw DimensionError("initial slice does not match chart");
  const SliceGeometry geom(chart);
  MomentReport rep;
  rep.N = chart.N();
  const bool dist = opt.mode == EvolutionMode::distribution;
  if (dist) {
    cur = trim_to_support(cur);
    if (opt.window) check_window(cur, geom, *opt.window, 0);
  }
  rep.rows.push_back(slice_moments(cur, geom));
  for (std::size_t step = 1; step <= opt.steps; ++step) {
    try {
      if (dist) {
        const ProbabilityVectorField X = provider(cur.grid, cur.layer, &cur.values);
        cur = trim_to_support(step_distribution(cur, X, chart, opt.jobs, opt.flush_threshold));
        if (opt.window) check_window(cur, geom, *opt.window, static_cast<long>(step));
      } else {
        Box out = cur.valid;
        for (auto& h : out.hi) --h;
        if (cur.valid.empty() || out.empty()) {
          std::ostringstream os;
          os << "evolution exhausted before step " << step << "; last valid slice at layer " << cur.layer
             << ", t = " << cur.t << ", valid region " << cur.valid.str();
          throw EvolutionExhausted(os.str());
        }
        const ProbabilityVectorField X = provider(Grid(out.lo, out.hi), cur.layer - 1, nullptr);
        cur = step_observable(cur, X, chart, opt.jobs);
      }
    } catch (const DomainViolation& e) {
      throw DomainViolation("step " + std::to_string(step) + ": " + e.what());
    }
    rep.rows.push_back(slice_moments(cur, geom));
  }
  rep.final_slice = std::move(cur);
  return rep;
}

}  // namespace

MomentReport run_scenario(Slice initial, const DriftSpec& spec, const CoordinateChart& chart, const RunOptions& opt) {
  Provider p = [&](const Grid& g, std::int64_t layer, const std::vector<double>* occ) {
    return slice_probabilities(spec, chart, g, layer, occ, opt.jobs);
  };
  return run(std::move(initial), p, chart, opt);
}

MomentReport run_scenario(Slice initial, const std::vector<double>& prob, const CoordinateChart& chart,
                          const RunOptions& opt) {
  if (prob.size() != chart.D()) throw DimensionError("need one probability per lattice direction");
  Provider p = [&](const Grid& g, std::int64_t, const std::vector<double>*) {
    return ProbabilityVectorField::constant(g, prob);
  };
  return run(std::move(initial), p, chart, opt);
}

GaussianMoments integrate_moments(const LinearMomentSystem& sys, const GaussianMoments& init, double T,
                                  std::size_t substeps) {
  if (substeps == 0) throw ConfigError("integrate_moments needs at least one substep");
  const double h = T / static_cast<double>(substeps);
  auto dm = [&](const Eigen::VectorXd& m) -> Eigen::VectorXd { return sys.M * m + sys.c; };
  auto dC = [&](const Eigen::MatrixXd& C) -> Eigen::MatrixXd { return sys.M * C + C * sys.M.transpose() + sys.D; };
  GaussianMoments s = init;
  for (std::size_t k = 0; k < substeps; ++k) {
    const Eigen::VectorXd m1 = dm(s.mean), m2 = dm(s.mean + 0.5 * h * m1), m3 = dm(s.mean + 0.5 * h * m2),
                          m4 = dm(s.mean + h * m3);
    const Eigen::MatrixXd c1 = dC(s.cov), c2 = dC(s.cov + 0.5 * h * c1), c3 = dC(s.cov + 0.5 * h * c2),
                          c4 = dC(s.cov + h * c3);
    s.mean += h / 6.0 * (m1 + 2 * m2 + 2 * m3 + m4);
    s.cov += h / 6.0 * (c1 + 2 * c2 + 2 * c3 + c4);
  }
  return s;
}

AnalyticSolution parse_analytic(const std::string& name) {
  if (name == "heat_kernel") return AnalyticSolution::heat_kernel;
  if (name == "smoluchowski_const") return AnalyticSolution::smoluchowski_const;
  if (name == "ou") return AnalyticSolution::ou;
  if (name == "kramers_moments") return AnalyticSolution::kramers_moments;
  throw ConfigError("unknown analytic solution '" + name + "'");
}

std::string to_string(AnalyticSolution a) {
  switch (a) {
    case AnalyticSolution::heat_kernel: return "heat_kernel";
    case AnalyticSolution::smoluchowski_const: return "smoluchowski_const";
    case AnalyticSolution::ou: return "ou";
    case AnalyticSolution::kramers_moments: return "kramers_moments";
  }
  return "?";
}

std::string ConvergenceTable::csv() const {
  std::ostringstream os;
  os << "eps,error,empirical_order\n";
  for (const auto& r : rows) {
    os << format_double(r.eps) << "," << format_double(r.error) << ",";
    if (r.order) os << format_double(*r.order);
    os << "\n";
  }
  return os.str();
}

std::size_t steps_for_horizon(double T, double b) {
  if (!(T >= 0.0) || !(b > 0.0)) throw ConfigError("horizon must be >= 0 and b > 0");
  const double n = T / b;
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-9 * std::max(1.0, n)) {
    std::ostringstream os;
    os << "horizon T = " << T << " is not a whole number of steps b = " << b;
    throw ConfigError(os.str());
  }
  return static_cast<std::size_t>(r);
}

namespace {

double observable_error(const ScalingFamily& family, const DriftSpec& spec, AnalyticSolution analytic, double eps,
                        const ConvergeSetup& setup, double h, std::size_t& steps) {
  const CoordinateChart chart = family.chart_at(eps);
  if (chart.N() != 1) throw DimensionError("observable oracles are one-dimensional");
  steps = steps_for_horizon(setup.T, chart.b());
  const double R = spec(0.0, Eigen::VectorXd::Zero(1))(0);
  if (analytic == AnalyticSolution::heat_kernel && R != 0.0) throw ConfigError("heat_kernel needs a drift-free walk");
  const double shift = R * setup.T;
  const double s0 = setup.s0;
  const double var = s0 * s0 + h * setup.T;
  PhysicalBox W{Eigen::VectorXd::Constant(1, -setup.window), Eigen::VectorXd::Constant(1, setup.window)};
  const Slice init =
      observable_slice(chart, [s0](const Eigen::VectorXd& x) { return std::exp(-x(0) * x(0) / (2 * s0 * s0)); }, W,
                       steps);
  RunOptions opt;
  opt.mode = EvolutionMode::observable;
  opt.steps = steps;
  const MomentReport rep = run_scenario(init, spec, chart, opt);
  const Slice& fin = rep.final_slice;
  const SliceGeometry geom(chart);
  double err = 0.0;
  for (std::size_t k = 0; k < fin.grid.size(); ++k) {
    const double x = geom.position(fin.layer, fin.grid.coords(k))(0);
    if (std::abs(x) > setup.window * (1 + 1e-12)) continue;
    const double exact = s0 / std::sqrt(var) * std::exp(-(x + shift) * (x + shift) / (2 * var));
    err = std::max(err, std::abs(fin.values[k] - exact));
  }
  return err;
}

double moment_error(const ScalingFamily& family, const DriftSpec& spec, double eps, const ConvergeSetup& setup,
                    const Eigen::MatrixXd& diffusion, std::size_t& steps) {
  const CoordinateChart chart = family.chart_at(eps);
  if (!spec.affine) throw UnsupportedInput("moment oracles need an affine drift");
  steps = steps_for_horizon(setup.T, chart.b());
  if (static_cast<std::size_t>(setup.x0.size()) != chart.N()) throw DimensionError("x0 has wrong dimension");
  const DeltaStart start = delta_slice(chart, setup.x0);
  RunOptions opt;
  opt.mode = EvolutionMode::distribution;
  opt.steps = steps;
  opt.flush_threshold = setup.flush_threshold;
  const MomentReport rep = run_scenario(start.slice, spec, chart, opt);
  const MomentRow& last = rep.rows.back();

  const auto n = static_cast<Eigen::Index>(chart.N());
  const GaussianMoments exact = integrate_moments({spec.affine->J, spec.affine->R0, diffusion},
                                                  {start.position, Eigen::MatrixXd::Zero(n, n)}, setup.T);
  double err = 0.0;
  std::size_t c = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    err = std::max(err, std::abs(last.mean[static_cast<std::size_t>(i)] - exact.mean(i)));
    for (Eigen::Index j = i; j < n; ++j) err = std::max(err, std::abs(last.cov[c++] - exact.cov(i, j)));
  }
  return err;
}

}  // namespace

ConvergenceTable converge(const ScalingFamily& family, const DriftSpec& spec, AnalyticSolution analytic,
                          const std::vector<double>& eps_grid, const ConvergeSetup& setup) {
  if (!is_strictly_decreasing(eps_grid)) throw ConfigError("eps grid must be strictly decreasing");
  Eigen::MatrixXd diffusion =
      setup.diffusion ? *setup.diffusion : continuum_coefficients(family, spec, eps_grid).eta_hat;

  ConvergenceTable table;
  table.analytic = to_string(analytic);
  table.rows.resize(eps_grid.size());
  std::vector<std::exception_ptr> errors(eps_grid.size());
  parallel_for(
      eps_grid.size(), setup.jobs,
      [&](std::size_t k) {
        try {
          ConvergenceRow& row = table.rows[k];
          row.eps = eps_grid[k];
          if (analytic == AnalyticSolution::heat_kernel || analytic == AnalyticSolution::smoluchowski_const)
            row.error = observable_error(family, spec, analytic, row.eps, setup, diffusion(0, 0), row.steps);
          else
            row.error = moment_error(family, spec, row.eps, setup, diffusion, row.steps);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      },
      1);
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t k = 1; k < table.rows.size(); ++k) {
    const auto& prev = table.rows[k - 1];
    auto& row = table.rows[k];
    if (!(row.error < prev.error)) table.monotone = false;
    if (row.error > 0 && prev.error > 0) row.order = std::log(prev.error / row.error) / std::log(prev.eps / row.eps);
  }
  return table;
}

}  // namespace latkin
