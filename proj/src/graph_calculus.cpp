#include "latkin/graph_calculus.hpp"

#include <cmath>
#include <string>

#include "latkin/errors.hpp"

namespace latkin {

namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw DimensionError(std::string(what) + ": size mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
}

void require_edge(std::size_t sites, const Edge& e) {
  if (e.first >= sites || e.second >= sites)
    throw DimensionError("edge endpoint outside the site set");
  if (e.first == e.second) throw DimensionError("self-loops are not arrows of the calculus");
}

}  // namespace

EdgeSet::EdgeSet(std::size_t sites, const std::vector<Edge>& edges) : sites_(sites) {
  if (sites == 0) throw DimensionError("site set must be nonempty");
  for (const auto& e : edges) {
    require_edge(sites, e);
    edges_.insert(e);
  }
}

EdgeSet EdgeSet::universal(std::size_t sites) {
  std::vector<Edge> all;
  for (std::size_t i = 0; i < sites; ++i)
    for (std::size_t j = 0; j < sites; ++j)
      if (i != j) all.emplace_back(i, j);
  return EdgeSet(sites, all);
}

ScalarField operator*(const ScalarField& f, const ScalarField& g) {
  require_same(f.size(), g.size(), "field product");
  ScalarField out(f.values);
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= g.values[i];
  return out;
}

double EdgeCoefficients::at(std::size_t i, std::size_t j) const {
  auto it = coeffs.find({i, j});
  return it == coeffs.end() ? 0.0 : it->second;
}

void EdgeCoefficients::set(std::size_t i, std::size_t j, double v) {
  require_edge(sites, {i, j});
  coeffs[{i, j}] = v;
}

OneForm basis_form(std::size_t sites, std::size_t i, std::size_t j) {
  OneForm w;
  w.sites = sites;
  w.set(i, j, 1.0);
  return w;
}

GraphVectorField basis_vector_field(std::size_t sites, std::size_t i, std::size_t j) {
  GraphVectorField X;
  X.sites = sites;
  X.set(i, j, 1.0);
  return X;
}

OneForm exterior_derivative(const ScalarField& f, const EdgeSet& edges) {
  require_same(f.size(), edges.sites(), "exterior_derivative");
  OneForm w;
  w.sites = edges.sites();
  for (const auto& [i, j] : edges.edges()) w.coeffs[{i, j}] = f[j] - f[i];
  return w;
}

OneForm bullet(const OneForm& w1, const OneForm& w2) {
  require_same(w1.sites, w2.sites, "bullet");
  OneForm out;
  out.sites = w1.sites;
  for (const auto& [e, c] : w1.coeffs) {
    auto it = w2.coeffs.find(e);
    if (it != w2.coeffs.end()) out.coeffs[e] = c * it->second;
  }
  return out;
}

OneForm add(const OneForm& w1, const OneForm& w2) {
  require_same(w1.sites, w2.sites, "add");
  OneForm out = w1;
  for (const auto& [e, c] : w2.coeffs) out.coeffs[e] += c;
  return out;
}

OneForm subtract(const OneForm& w1, const OneForm& w2) {
  require_same(w1.sites, w2.sites, "subtract");
  OneForm out = w1;
  for (const auto& [e, c] : w2.coeffs) out.coeffs[e] -= c;
  return out;
}

OneForm left_multiply(const ScalarField& f, const OneForm& w) {
  require_same(f.size(), w.sites, "left_multiply");
  OneForm out = w;
  for (auto& [e, c] : out.coeffs) c *= f[e.first];
  return out;
}

OneForm right_multiply(const OneForm& w, const ScalarField& f) {
  require_same(f.size(), w.sites, "right_multiply");
  OneForm out = w;
  for (auto& [e, c] : out.coeffs) c *= f[e.second];
  return out;
}

OneForm leibniz_defect(const ScalarField& f, const ScalarField& g, const EdgeSet& edges) {
  const OneForm dfg = exterior_derivative(f * g, edges);
  const OneForm f_dg = left_multiply(f, exterior_derivative(g, edges));
  const OneForm g_df = left_multiply(g, exterior_derivative(f, edges));
  return subtract(subtract(dfg, f_dg), g_df);
}

ScalarField apply_vector_field(const GraphVectorField& X, const ScalarField& f) {
  require_same(f.size(), X.sites, "apply_vector_field");
  ScalarField out = ScalarField::constant(f.size(), 0.0);
  for (const auto& [e, c] : X.coeffs) out.values[e.first] += c * (f[e.second] - f[e.first]);
  return out;
}

ScalarField pair(const OneForm& w, const GraphVectorField& X) {
  require_same(w.sites, X.sites, "pair");
  ScalarField out = ScalarField::constant(w.sites, 0.0);
  for (const auto& [e, c] : X.coeffs) out.values[e.first] += c * w.at(e.first, e.second);
  return out;
}

ScalarField endomorphism_defect(const GraphVectorField& X, const ScalarField& f, const ScalarField& g) {
  const ScalarField Xf = apply_vector_field(X, f);
  const ScalarField Xg = apply_vector_field(X, g);
  const ScalarField Xfg = apply_vector_field(X, f * g);
  ScalarField out = Xfg;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.values[i] -= g[i] * Xf[i] + f[i] * Xg[i] + Xf[i] * Xg[i];
  return out;
}

ScalarField AlgebraEndomorphism::apply(const ScalarField& f) const {
  require_same(f.size(), static_cast<std::size_t>(matrix.cols()), "endomorphism apply");
  Eigen::VectorXd v = matrix * Eigen::Map<const Eigen::VectorXd>(f.values.data(), f.values.size());
  return ScalarField(std::vector<double>(v.data(), v.data() + v.size()));
}

AlgebraEndomorphism make_endomorphism(const GraphVectorField& X, std::size_t cap) {
  if (X.sites > cap)
    throw UnsupportedInput("dense endomorphism requested for " + std::to_string(X.sites) +
                           " sites, above the cap of " + std::to_string(cap));
  const auto n = static_cast<Eigen::Index>(X.sites);
  AlgebraEndomorphism phi{Eigen::MatrixXd::Identity(n, n)};
  for (const auto& [e, c] : X.coeffs) {
    const auto i = static_cast<Eigen::Index>(e.first);
    const auto j = static_cast<Eigen::Index>(e.second);
    phi.matrix(i, j) += c;
    phi.matrix(i, i) -= c;
  }
  return phi;
}

const char* to_string(GeneratorClass c) {
  switch (c) {
    case GeneratorClass::flow: return "flow";
    case GeneratorClass::endomorphism_only: return "endomorphism_only";
    case GeneratorClass::general: return "general";
  }
  return "?";
}

Classification classify_generator(const GraphVectorField& X, double tol) {
  const std::size_t n = X.sites;
  Classification out;
  out.site_map.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.site_map[i] = i;

  // Per site: every outgoing coefficient is 0 or 1, and at most one is 1.
  std::vector<int> ones(n, 0);
  for (const auto& [e, c] : X.coeffs) {
    const bool zero = std::abs(c) <= tol;
    const bool one = std::abs(c - 1.0) <= tol;
    if (!zero && !one) {
      out.failing_site = e.first;
      break;
    }
    if (one) {
      if (++ones[e.first] > 1) {
        out.failing_site = e.first;
        break;
      }
      out.site_map[e.first] = e.second;
    }
  }
  if (out.failing_site) {
    out.kind = GeneratorClass::general;
    out.site_map.clear();
    return out;
  }

  std::vector<std::size_t> inverse(n, n);
  bool bijective = true;
  for (std::size_t i = 0; i < n && bijective; ++i) {
    const std::size_t target = out.site_map[i];
    if (inverse[target] != n)
      bijective = false;
    else
      inverse[target] = i;
  }
  if (bijective) {
    out.kind = GeneratorClass::flow;
    out.inverse_map = std::move(inverse);
  } else {
    out.kind = GeneratorClass::endomorphism_only;
  }
  return out;
}

}  // namespace latkin
