#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace latkin {

using Edge = std::pair<std::size_t, std::size_t>;

/** Admitted arrows e_ij of a first-order calculus on sites 0..sites-1. */
class EdgeSet {
 public:
  EdgeSet(std::size_t sites, const std::vector<Edge>& edges);
  static EdgeSet universal(std::size_t sites);

  std::size_t sites() const { return sites_; }
  bool admits(const Edge& e) const { return edges_.count(e) != 0; }
  const std::set<Edge>& edges() const { return edges_; }

 private:
  std::size_t sites_;
  std::set<Edge> edges_;
};

struct ScalarField {
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(std::vector<double> v) : values(std::move(v)) {}
  static ScalarField constant(std::size_t n, double c) { return ScalarField(std::vector<double>(n, c)); }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

ScalarField operator*(const ScalarField& f, const ScalarField& g);

// Sparse edge coefficients; absent edges are zero.
struct EdgeCoefficients {
  std::size_t sites = 0;
  std::map<Edge, double> coeffs;

  double at(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, double v);
};

struct OneForm : EdgeCoefficients {};
struct GraphVectorField : EdgeCoefficients {};

OneForm basis_form(std::size_t sites, std::size_t i, std::size_t j);
GraphVectorField basis_vector_field(std::size_t sites, std::size_t i, std::size_t j);

OneForm exterior_derivative(const ScalarField& f, const EdgeSet& edges);
OneForm bullet(const OneForm& w1, const OneForm& w2);
OneForm add(const OneForm& w1, const OneForm& w2);
OneForm subtract(const OneForm& w1, const OneForm& w2);
// f·e_ij = f_i e_ij
OneForm left_multiply(const ScalarField& f, const OneForm& w);
// e_ij·f = f_j e_ij
OneForm right_multiply(const OneForm& w, const ScalarField& f);

// d(fg) − f·dg − g·df, which the calculus forces to equal df • dg.
OneForm leibniz_defect(const ScalarField& f, const ScalarField& g, const EdgeSet& edges);

ScalarField apply_vector_field(const GraphVectorField& X, const ScalarField& f);
// Duality pairing ⟨w, X⟩ evaluated sitewise: Σ_j w(i,j) X^{ij}.
ScalarField pair(const OneForm& w, const GraphVectorField& X);

ScalarField endomorphism_defect(const GraphVectorField& X, const ScalarField& f, const ScalarField& g);

struct AlgebraEndomorphism {
  Eigen::MatrixXd matrix;
  ScalarField apply(const ScalarField& f) const;
};

inline constexpr std::size_t kDefaultEndomorphismCap = 4096;

// φ = I + X as a dense matrix on site values.
AlgebraEndomorphism make_endomorphism(const GraphVectorField& X,
                                      std::size_t cap = kDefaultEndomorphismCap);

enum class GeneratorClass { flow, endomorphism_only, general };

const char* to_string(GeneratorClass c);

struct Classification {
  GeneratorClass kind = GeneratorClass::general;
  // Φ with φ(f)(i) = f(Φ(i)); empty for `general`.
  std::vector<std::size_t> site_map;
  // Φ⁻¹ with φ(e_i) = e_{Φ⁻¹(i)}; only for `flow`.
  std::vector<std::size_t> inverse_map;
  // first site where the idempotent-coefficient condition fails
  std::optional<std::size_t> failing_site;
};

Classification classify_generator(const GraphVectorField& X, double tol = 1e-12);

}  // namespace latkin
