#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace latkin {

using Coord = std::vector<std::int64_t>;

// Inclusive integer box; empty when lo > hi on some axis.
struct Box {
  Coord lo, hi;

  bool empty() const;
  bool contains(std::span<const std::int64_t> c) const;
  std::string str() const;
};

/** Dense row-major indexing of an integer box (last axis fastest). */
class Grid {
 public:
  Grid() = default;
  Grid(Coord lo, Coord hi);

  std::size_t dim() const { return lo_.size(); }
  std::size_t size() const { return size_; }
  const Coord& lo() const { return lo_; }
  const Coord& hi() const { return hi_; }
  std::int64_t extent(std::size_t axis) const { return hi_[axis] - lo_[axis] + 1; }
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }
  Box box() const { return {lo_, hi_}; }

  bool contains(std::span<const std::int64_t> c) const;
  std::size_t index(std::span<const std::int64_t> c) const;
  void coords(std::size_t index, std::span<std::int64_t> out) const;
  Coord coords(std::size_t index) const;

  bool operator==(const Grid& o) const { return lo_ == o.lo_ && hi_ == o.hi_; }

 private:
  Coord lo_, hi_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

enum class BoundaryPolicy { shrinking_domain, periodic };

/** Finite piece of the oriented lattice Z^{N+1}; arrows only k -> k + μ̂. */
class LatticeWindow {
 public:
  LatticeWindow(Coord lo, Coord hi, BoundaryPolicy policy = BoundaryPolicy::shrinking_domain);

  const Grid& grid() const { return grid_; }
  std::size_t dim() const { return grid_.dim(); }
  std::size_t size() const { return grid_.size(); }
  BoundaryPolicy policy() const { return policy_; }

  // Index of u + μ̂ if resolvable under the policy, otherwise size().
  std::size_t neighbor(std::size_t site, std::size_t mu) const;

  bool operator==(const LatticeWindow& o) const { return grid_ == o.grid_ && policy_ == o.policy_; }

 private:
  Grid grid_;
  BoundaryPolicy policy_;
};

struct LatticeField {
  LatticeWindow window;
  std::vector<double> values;
  Box valid;

  static LatticeField from_function(const LatticeWindow& w,
                                    const std::function<double(std::span<const std::int64_t>)>& f);
};

/** Per-site coefficients over the du^μ basis. */
struct LatticeOneForm {
  LatticeWindow window;
  std::vector<double> comps;  // size * dim, site-major
  Box valid;

  double at(std::size_t site, std::size_t mu) const { return comps[site * window.dim() + mu]; }
};

/** Per-site transition probabilities over `directions` lattice directions. */
class ProbabilityVectorField {
 public:
  static constexpr double kTolerance = 1e-12;

  // Validates P ≥ 0 and Σ P = 1 (tolerance 1e-12) at every site. Entries within
  // the tolerance of 0 are set to exactly 0; nothing is renormalized.
  static ProbabilityVectorField create(const Grid& grid, std::size_t directions,
                                       std::vector<double> P);
  static ProbabilityVectorField constant(const Grid& grid, const std::vector<double>& p);

  const Grid& grid() const { return grid_; }
  std::size_t directions() const { return directions_; }
  double at(std::size_t site, std::size_t mu) const { return P_[site * directions_ + mu]; }
  std::span<const double> site(std::size_t s) const {
    return {P_.data() + s * directions_, directions_};
  }
  const std::vector<double>& data() const { return P_; }

 private:
  ProbabilityVectorField(Grid g, std::size_t d, std::vector<double> P)
      : grid_(std::move(g)), directions_(d), P_(std::move(P)) {}
  Grid grid_;
  std::size_t directions_ = 0;
  std::vector<double> P_;
};

struct CorrelationMatrix {
  Grid grid;
  std::size_t D = 0;
  std::vector<double> entries;  // size * D * D

  double at(std::size_t site, std::size_t mu, std::size_t nu) const {
    return entries[(site * D + mu) * D + nu];
  }
};

LatticeOneForm lattice_differential(const LatticeField& f);
LatticeOneForm coordinate_form(const LatticeWindow& w, std::size_t mu);  // du^μ
LatticeOneForm unit_form(const LatticeWindow& w);                       // ρ = Σ du^μ
LatticeOneForm time_form(const LatticeWindow& w, double b);             // dt = −bρ

LatticeOneForm bullet(const LatticeOneForm& w1, const LatticeOneForm& w2);
LatticeOneForm add(const LatticeOneForm& w1, const LatticeOneForm& w2);
LatticeOneForm subtract(const LatticeOneForm& w1, const LatticeOneForm& w2);
LatticeOneForm scale(const std::vector<double>& site_factor, const LatticeOneForm& w);
LatticeOneForm scale(double c, const LatticeOneForm& w);

LatticeField contract(const LatticeOneForm& w, const ProbabilityVectorField& X);
LatticeOneForm unit_form_check(const LatticeOneForm& w);

CorrelationMatrix correlation_matrix(const ProbabilityVectorField& X);
// Same matrix through ⟨(du^μ − P^μρ) • (du^ν − P^νρ), X⟩.
CorrelationMatrix correlation_matrix_via_unit_form(const LatticeWindow& w, const ProbabilityVectorField& X);

LatticeField variance_of_form(const LatticeOneForm& w, const ProbabilityVectorField& X);
// ⟨w1 • w2, X⟩ − ⟨w1, X⟩⟨w2, X⟩
LatticeField covariance_of_forms(const LatticeOneForm& w1, const LatticeOneForm& w2,
                                 const ProbabilityVectorField& X);

}  // namespace latkin
