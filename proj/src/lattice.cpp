#include "latkin/lattice.hpp"

#include <cmath>
#include <sstream>

#include "latkin/errors.hpp"

namespace latkin {

bool Box::empty() const {
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (lo[k] > hi[k]) return true;
  return false;
}

bool Box::contains(std::span<const std::int64_t> c) const {
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (c[k] < lo[k] || c[k] > hi[k]) return false;
  return true;
}

std::string Box::str() const {
  std::ostringstream os;
  for (std::size_t k = 0; k < lo.size(); ++k) os << (k ? " x " : "") << "[" << lo[k] << "," << hi[k] << "]";
  return os.str();
}

Grid::Grid(Coord lo, Coord hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size() || lo_.empty()) throw DimensionError("grid bounds must have equal nonzero rank");
  strides_.assign(lo_.size(), 1);
  size_ = 1;
  for (std::size_t k = lo_.size(); k-- > 0;) {
    if (hi_[k] < lo_[k]) throw DimensionError("grid axis with hi < lo");
    strides_[k] = size_;
    size_ *= static_cast<std::size_t>(hi_[k] - lo_[k] + 1);
  }
}

bool Grid::contains(std::span<const std::int64_t> c) const {
  for (std::size_t k = 0; k < lo_.size(); ++k)
    if (c[k] < lo_[k] || c[k] > hi_[k]) return false;
  return true;
}

std::size_t Grid::index(std::span<const std::int64_t> c) const {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < lo_.size(); ++k) idx += static_cast<std::size_t>(c[k] - lo_[k]) * strides_[k];
  return idx;
}

void Grid::coords(std::size_t index, std::span<std::int64_t> out) const {
  for (std::size_t k = 0; k < lo_.size(); ++k) {
    out[k] = lo_[k] + static_cast<std::int64_t>(index / strides_[k]);
    index %= strides_[k];
  }
}

Coord Grid::coords(std::size_t index) const {
  Coord c(lo_.size());
  coords(index, c);
  return c;
}

LatticeWindow::LatticeWindow(Coord lo, Coord hi, BoundaryPolicy policy)
    : grid_(std::move(lo), std::move(hi)), policy_(policy) {
  if (grid_.dim() < 2) throw DimensionError("lattice window needs N+1 >= 2 directions");
  for (std::size_t k = 0; k < grid_.dim(); ++k)
    if (grid_.extent(k) < 2) throw DimensionError("lattice window extents must be >= 2");
}

std::size_t LatticeWindow::neighbor(std::size_t site, std::size_t mu) const {
  const std::int64_t coord = grid_.lo()[mu] + static_cast<std::int64_t>((site / grid_.stride(mu)) % grid_.extent(mu));
  if (coord < grid_.hi()[mu]) return site + grid_.stride(mu);
  if (policy_ == BoundaryPolicy::periodic)
    return site - static_cast<std::size_t>(grid_.extent(mu) - 1) * grid_.stride(mu);
  return size();
}

namespace {

Box full_or_shrunk(const LatticeWindow& w) {
  Box b = w.grid().box();
  if (w.policy() == BoundaryPolicy::shrinking_domain)
    for (auto& h : b.hi) --h;
  return b;
}

void require_window(const LatticeWindow& a, const LatticeWindow& b, const char* what) {
  if (!(a == b)) throw DimensionError(std::string(what) + ": windows differ");
}

void require_field(const LatticeWindow& w, const ProbabilityVectorField& X, const char* what) {
  if (!(w.grid() == X.grid()) || X.directions() != w.dim())
    throw DimensionError(std::string(what) + ": probability field does not live on this window");
}

Box intersect(const Box& a, const Box& b) {
  Box out = a;
  for (std::size_t k = 0; k < a.lo.size(); ++k) {
    out.lo[k] = std::max(a.lo[k], b.lo[k]);
    out.hi[k] = std::min(a.hi[k], b.hi[k]);
  }
  return out;
}

LatticeOneForm zero_form(const LatticeWindow& w) {
  return {w, std::vector<double>(w.size() * w.dim(), 0.0), w.grid().box()};
}

}  // namespace

LatticeField LatticeField::from_function(const LatticeWindow& w,
                                         const std::function<double(std::span<const std::int64_t>)>& f) {
  LatticeField out{w, std::vector<double>(w.size()), w.grid().box()};
  Coord c(w.dim());
  for (std::size_t s = 0; s < w.size(); ++s) {
    w.grid().coords(s, c);
    out.values[s] = f(c);
  }
  return out;
}

ProbabilityVectorField ProbabilityVectorField::create(const Grid& grid, std::size_t directions,
                                                      std::vector<double> P) {
  if (directions == 0 || P.size() != grid.size() * directions)
    throw DimensionError("probability field has the wrong number of entries");
  for (std::size_t s = 0; s < grid.size(); ++s) {
    double sum = 0.0;
    for (std::size_t mu = 0; mu < directions; ++mu) {
      double& p = P[s * directions + mu];
      if (!std::isfinite(p) || p < -kTolerance || p > 1.0 + kTolerance) {
        std::ostringstream os;
        os << "P^" << mu << " = " << p << " outside [0,1] at lattice site (";
        const Coord c = grid.coords(s);
        for (std::size_t k = 0; k < c.size(); ++k) os << (k ? "," : "") << c[k];
        os << ")";
        throw DomainViolation(os.str());
      }
      if (std::abs(p) <= kTolerance) p = 0.0;
      sum += p;
    }
    if (std::abs(sum - 1.0) > kTolerance) {
      std::ostringstream os;
      os << "probabilities sum to " << sum << " at site index " << s;
      throw DomainViolation(os.str());
    }
  }
  return ProbabilityVectorField(grid, directions, std::move(P));
}

ProbabilityVectorField ProbabilityVectorField::constant(const Grid& grid, const std::vector<double>& p) {
  std::vector<double> P;
  P.reserve(grid.size() * p.size());
  for (std::size_t s = 0; s < grid.size(); ++s) P.insert(P.end(), p.begin(), p.end());
  return create(grid, p.size(), std::move(P));
}

LatticeOneForm lattice_differential(const LatticeField& f) {
  const auto& w = f.window;
  const std::size_t D = w.dim();
  LatticeOneForm out{w, std::vector<double>(w.size() * D, 0.0), intersect(full_or_shrunk(w), f.valid)};
  if (w.policy() == BoundaryPolicy::shrinking_domain)
    for (std::size_t k = 0; k < D; ++k) out.valid.hi[k] = std::min(out.valid.hi[k], f.valid.hi[k] - 1);
  for (std::size_t s = 0; s < w.size(); ++s)
    for (std::size_t mu = 0; mu < D; ++mu) {
      const std::size_t n = w.neighbor(s, mu);
      if (n < w.size()) out.comps[s * D + mu] = f.values[n] - f.values[s];
    }
  return out;
}

LatticeOneForm coordinate_form(const LatticeWindow& w, std::size_t mu) {
  if (mu >= w.dim()) throw DimensionError("coordinate_form: direction out of range");
  LatticeOneForm out = zero_form(w);
  for (std::size_t s = 0; s < w.size(); ++s) out.comps[s * w.dim() + mu] = 1.0;
  return out;
}

LatticeOneForm unit_form(const LatticeWindow& w) {
  LatticeOneForm out = zero_form(w);
  std::fill(out.comps.begin(), out.comps.end(), 1.0);
  return out;
}

LatticeOneForm time_form(const LatticeWindow& w, double b) {
  if (!(b > 0)) throw ConfigError("time step b must be positive");
  return scale(-b, unit_form(w));
}

LatticeOneForm bullet(const LatticeOneForm& w1, const LatticeOneForm& w2) {
  require_window(w1.window, w2.window, "bullet");
  LatticeOneForm out{w1.window, w1.comps, intersect(w1.valid, w2.valid)};
  for (std::size_t k = 0; k < out.comps.size(); ++k) out.comps[k] *= w2.comps[k];
  return out;
}

LatticeOneForm add(const LatticeOneForm& w1, const LatticeOneForm& w2) {
  require_window(w1.window, w2.window, "add");
  LatticeOneForm out{w1.window, w1.comps, intersect(w1.valid, w2.valid)};
  for (std::size_t k = 0; k < out.comps.size(); ++k) out.comps[k] += w2.comps[k];
  return out;
}

LatticeOneForm subtract(const LatticeOneForm& w1, const LatticeOneForm& w2) {
  require_window(w1.window, w2.window, "subtract");
  LatticeOneForm out{w1.window, w1.comps, intersect(w1.valid, w2.valid)};
  for (std::size_t k = 0; k < out.comps.size(); ++k) out.comps[k] -= w2.comps[k];
  return out;
}

LatticeOneForm scale(const std::vector<double>& site_factor, const LatticeOneForm& w) {
  if (site_factor.size() != w.window.size()) throw DimensionError("scale: one factor per site required");
  LatticeOneForm out = w;
  const std::size_t D = w.window.dim();
  for (std::size_t s = 0; s < w.window.size(); ++s)
    for (std::size_t mu = 0; mu < D; ++mu) out.comps[s * D + mu] *= site_factor[s];
  return out;
}

LatticeOneForm scale(double c, const LatticeOneForm& w) {
  LatticeOneForm out = w;
  for (auto& v : out.comps) v *= c;
  return out;
}

LatticeField contract(const LatticeOneForm& w, const ProbabilityVectorField& X) {
  require_field(w.window, X, "contract");
  const std::size_t D = w.window.dim();
  LatticeField out{w.window, std::vector<double>(w.window.size(), 0.0), w.valid};
  for (std::size_t s = 0; s < w.window.size(); ++s) {
    double acc = 0.0;
    for (std::size_t mu = 0; mu < D; ++mu) acc += w.comps[s * D + mu] * X.at(s, mu);
    out.values[s] = acc;
  }
  return out;
}

LatticeOneForm unit_form_check(const LatticeOneForm& w) { return bullet(unit_form(w.window), w); }

CorrelationMatrix correlation_matrix(const ProbabilityVectorField& X) {
  const std::size_t D = X.directions();
  CorrelationMatrix out{X.grid(), D, std::vector<double>(X.grid().size() * D * D, 0.0)};
  for (std::size_t s = 0; s < X.grid().size(); ++s)
    for (std::size_t mu = 0; mu < D; ++mu)
      for (std::size_t nu = 0; nu < D; ++nu) {
        const double pm = X.at(s, mu);
        out.entries[(s * D + mu) * D + nu] = (mu == nu ? pm : 0.0) - pm * X.at(s, nu);
      }
  return out;
}

CorrelationMatrix correlation_matrix_via_unit_form(const LatticeWindow& w, const ProbabilityVectorField& X) {
  require_field(w, X, "correlation_matrix_via_unit_form");
  const std::size_t D = w.dim();
  const LatticeOneForm rho = unit_form(w);
  std::vector<LatticeOneForm> centered;
  centered.reserve(D);
  for (std::size_t mu = 0; mu < D; ++mu) {
    std::vector<double> pmu(w.size());
    for (std::size_t s = 0; s < w.size(); ++s) pmu[s] = X.at(s, mu);
    centered.push_back(subtract(coordinate_form(w, mu), scale(pmu, rho)));
  }
  CorrelationMatrix out{w.grid(), D, std::vector<double>(w.size() * D * D, 0.0)};
  for (std::size_t mu = 0; mu < D; ++mu)
    for (std::size_t nu = 0; nu < D; ++nu) {
      const LatticeField c = contract(bullet(centered[mu], centered[nu]), X);
      for (std::size_t s = 0; s < w.size(); ++s) out.entries[(s * D + mu) * D + nu] = c.values[s];
    }
  return out;
}

LatticeField variance_of_form(const LatticeOneForm& w, const ProbabilityVectorField& X) {
  require_field(w.window, X, "variance_of_form");
  const CorrelationMatrix C = correlation_matrix(X);
  const std::size_t D = w.window.dim();
  LatticeField out{w.window, std::vector<double>(w.window.size(), 0.0), w.valid};
  for (std::size_t s = 0; s < w.window.size(); ++s) {
    double acc = 0.0;
    for (std::size_t mu = 0; mu < D; ++mu)
      for (std::size_t nu = 0; nu < D; ++nu) acc += w.comps[s * D + mu] * C.at(s, mu, nu) * w.comps[s * D + nu];
    out.values[s] = acc;
  }
  return out;
}

LatticeField covariance_of_forms(const LatticeOneForm& w1, const LatticeOneForm& w2,
                                 const ProbabilityVectorField& X) {
  const LatticeField prod = contract(bullet(w1, w2), X);
  const LatticeField m1 = contract(w1, X);
  const LatticeField m2 = contract(w2, X);
  LatticeField out = prod;
  out.valid = intersect(w1.valid, w2.valid);
  for (std::size_t s = 0; s < out.values.size(); ++s) out.values[s] -= m1.values[s] * m2.values[s];
  return out;
}

}  // namespace latkin
