#include "latkin/identity_suite.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "latkin/errors.hpp"
#include "latkin/lattice.hpp"
#include "latkin/numerics.hpp"

namespace latkin {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

EdgeSet random_digraph(Rng& rng, std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && uniform(rng, 0, 1) < 0.5) edges.emplace_back(i, j);
  if (edges.empty()) edges.emplace_back(0, 1);
  return EdgeSet(n, edges);
}

ScalarField random_field(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform(rng, -2, 2);
  return ScalarField(v);
}

OneForm random_form(Rng& rng, const EdgeSet& es) {
  OneForm w;
  w.sites = es.sites();
  for (const auto& e : es.edges()) w.set(e.first, e.second, uniform(rng));
  return w;
}

double max_diff(const OneForm& a, const OneForm& b) {
  double m = 0.0;
  for (const auto& [e, c] : a.coeffs) m = std::max(m, std::abs(c - b.at(e.first, e.second)));
  for (const auto& [e, c] : b.coeffs) m = std::max(m, std::abs(c - a.at(e.first, e.second)));
  return m;
}

nlohmann::json instance_json(const EdgeSet& es, const std::vector<ScalarField>& fields,
                             const std::vector<OneForm>& forms) {
  nlohmann::json j;
  j["sites"] = es.sites();
  j["edges"] = nlohmann::json::array();
  for (const auto& e : es.edges()) j["edges"].push_back({e.first, e.second});
  j["fields"] = nlohmann::json::array();
  for (const auto& f : fields) j["fields"].push_back(f.values);
  j["forms"] = nlohmann::json::array();
  for (const auto& w : forms) {
    nlohmann::json fj = nlohmann::json::array();
    for (const auto& [e, c] : w.coeffs) fj.push_back({e.first, e.second, c});
    j["forms"].push_back(fj);
  }
  return j;
}

void update(IdentityResult& r, double residual, double tol, const std::function<std::string()>& dump) {
  ++r.instances;
  if (residual > r.max_residual || std::isnan(residual)) r.max_residual = residual;
  if ((!(residual < tol)) && r.passed) {
    r.passed = false;
    r.failing_instance = dump();
  }
}

std::vector<double> random_probabilities(Rng& rng, std::size_t D) {
  std::vector<double> p(D, 0.0);
  const double kind = uniform(rng, 0, 1);
  if (kind < 0.15) {  // deterministic direction
    p[static_cast<std::size_t>(uniform(rng, 0, 1) * static_cast<double>(D)) % D] = 1.0;
    return p;
  }
  double total = 0.0;
  for (auto& x : p) {
    x = -std::log(uniform(rng, 1e-12, 1.0));
    if (kind < 0.35 && uniform(rng, 0, 1) < 0.4) x = 0.0;  // sparse support
    total += x;
  }
  if (total == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (auto& x : p) x /= total;
  // Make the sum exact by absorbing rounding into the largest entry.
  double s = 0.0;
  for (double x : p) s += x;
  *std::max_element(p.begin(), p.end()) += 1.0 - s;
  return p;
}

IdentityResult named(std::string name) {
  IdentityResult r;
  r.name = std::move(name);
  return r;
}

}  // namespace

bool SuiteReport::all_passed() const {
  return std::all_of(results.begin(), results.end(), [](const IdentityResult& r) { return r.passed; });
}

std::string SuiteReport::text() const {
  std::ostringstream os;
  os.precision(3);
  for (const auto& r : results) {
    os << (r.passed ? "PASS " : "FAIL ") << r.name << ": max residual " << std::scientific << r.max_residual
       << " over " << r.instances << " instances\n";
    if (!r.passed) os << "  failing instance: " << r.failing_instance << "\n";
  }
  return os.str();
}

GeneratorClass brute_force_class(const GraphVectorField& X, double tol) {
  const std::size_t n = X.sites;
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& [e, c] : X.coeffs) {
    phi(static_cast<Eigen::Index>(e.first), static_cast<Eigen::Index>(e.second)) += c;
    phi(static_cast<Eigen::Index>(e.first), static_cast<Eigen::Index>(e.first)) -= c;
  }
  // φ(e_i e_j) = φ(e_i) φ(e_j) on the idempotent basis, with φ(e_i) = column i.
  bool endo = true;
  for (Eigen::Index i = 0; i < phi.cols() && endo; ++i)
    for (Eigen::Index j = 0; j < phi.cols() && endo; ++j) {
      const Eigen::VectorXd lhs = i == j ? Eigen::VectorXd(phi.col(i)) : Eigen::VectorXd::Zero(phi.rows());
      const Eigen::VectorXd rhs = phi.col(i).cwiseProduct(phi.col(j));
      endo = (lhs - rhs).cwiseAbs().maxCoeff() <= tol;
    }
  if (!endo) return GeneratorClass::general;
  // Bijective site map: φ is a permutation matrix.
  bool perm = true;
  for (Eigen::Index i = 0; i < phi.rows() && perm; ++i) {
    int row_ones = 0, col_ones = 0;
    for (Eigen::Index j = 0; j < phi.cols(); ++j) {
      row_ones += std::abs(phi(i, j) - 1.0) <= tol;
      col_ones += std::abs(phi(j, i) - 1.0) <= tol;
    }
    perm = row_ones == 1 && col_ones == 1;
  }
  return perm ? GeneratorClass::flow : GeneratorClass::endomorphism_only;
}

SuiteReport run_identity_suite(const SuiteOptions& opt) {
  if (opt.graph_instances == 0 || opt.max_sites < 2 || opt.probability_fields == 0)
    throw ConfigError("identity suite needs at least one instance and two sites");
  if (opt.max_spatial_dim < 1 || opt.max_spatial_dim > 4)
    throw ConfigError("probability-field dimension must be within 1..4");
  Rng rng(opt.seed);
  const double tol = opt.tolerance;

  IdentityResult leib = named("Leibniz defect equals df • dg");
  IdentityResult comm = named("bullet commutativity");
  IdentityResult assoc = named("bullet associativity");
  IdentityResult module = named("bimodule relations f e_ij = f_i e_ij, e_ij f = f_j e_ij");
  IdentityResult commutator = named("w • df = w f − f w");
  IdentityResult flows = named("flow classification agrees with brute force");

  for (std::size_t k = 0; k < opt.graph_instances; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(uniform(rng, 0, 1) * static_cast<double>(opt.max_sites - 1));
    const std::size_t sites = std::min(n, opt.max_sites);
    const EdgeSet es = random_digraph(rng, sites);
    const ScalarField f = random_field(rng, sites), g = random_field(rng, sites);
    const OneForm w1 = random_form(rng, es), w2 = random_form(rng, es), w3 = random_form(rng, es);
    auto dump = [&] { return instance_json(es, {f, g}, {w1, w2, w3}).dump(); };

    const OneForm df = exterior_derivative(f, es), dg = exterior_derivative(g, es);
    update(leib, max_diff(leibniz_defect(f, g, es), opt.bullet(df, dg)), tol, dump);
    update(comm, max_diff(opt.bullet(w1, w2), opt.bullet(w2, w1)), tol, dump);
    update(assoc, max_diff(opt.bullet(opt.bullet(w1, w2), w3), opt.bullet(w1, opt.bullet(w2, w3))), tol, dump);

    double mod = max_diff(left_multiply(g, right_multiply(w1, f)), right_multiply(left_multiply(g, w1), f));
    for (const auto& e : es.edges()) {
      const OneForm b = basis_form(sites, e.first, e.second);
      mod = std::max(mod, std::abs(left_multiply(f, b).at(e.first, e.second) - f[e.first]));
      mod = std::max(mod, std::abs(right_multiply(b, f).at(e.first, e.second) - f[e.second]));
    }
    update(module, mod, tol, dump);
    update(commutator, max_diff(opt.bullet(w1, df), subtract(right_multiply(w1, f), left_multiply(f, w1))), tol,
           dump);

    // Random generator with {0,1} coefficients on admitted edges.
    GraphVectorField X;
    X.sites = sites;
    for (const auto& e : es.edges())
      if (uniform(rng, 0, 1) < 0.3) X.set(e.first, e.second, 1.0);
    const bool agree = classify_generator(X).kind == brute_force_class(X);
    update(flows, agree ? 0.0 : 1.0, 0.5, [&] {
      nlohmann::json j;
      for (const auto& [e, c] : X.coeffs) j.push_back({e.first, e.second, c});
      return j.dump();
    });
  }

  IdentityResult symm = named("correlation matrix symmetric");
  IdentityResult psd = named("correlation matrix positive semidefinite");
  IdentityResult kernel = named("correlation matrix annihilates (1,...,1)");
  IdentityResult vanish = named("correlation matrix vanishes exactly on flows");
  IdentityResult paths = named("correlation matrix: direct and unit-form paths agree");
  for (std::size_t k = 0; k < opt.probability_fields; ++k) {
    const std::size_t N = 1 + k % opt.max_spatial_dim;
    const std::size_t D = N + 1;
    const LatticeWindow w(Coord(D, 0), Coord(D, 1));
    std::vector<double> P;
    for (std::size_t s = 0; s < w.size(); ++s) {
      const auto p = random_probabilities(rng, D);
      P.insert(P.end(), p.begin(), p.end());
    }
    const ProbabilityVectorField X = ProbabilityVectorField::create(w.grid(), D, P);
    auto dump = [&] {
      nlohmann::json j;
      j["directions"] = D;
      j["P"] = X.data();
      return j.dump();
    };
    const CorrelationMatrix C = correlation_matrix(X);
    const CorrelationMatrix C2 = correlation_matrix_via_unit_form(w, X);
    double rs = 0, rp = 0, rk = 0, rv = 0, ra = 0;
    for (std::size_t s = 0; s < w.size(); ++s) {
      Eigen::MatrixXd M(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D));
      bool flow = false;
      for (std::size_t mu = 0; mu < D; ++mu) {
        flow = flow || X.at(s, mu) == 1.0;
        double row = 0.0;
        for (std::size_t nu = 0; nu < D; ++nu) {
          M(static_cast<Eigen::Index>(mu), static_cast<Eigen::Index>(nu)) = C.at(s, mu, nu);
          row += C.at(s, mu, nu);
          rs = std::max(rs, std::abs(C.at(s, mu, nu) - C.at(s, nu, mu)));
          ra = std::max(ra, std::abs(C.at(s, mu, nu) - C2.at(s, mu, nu)));
        }
        rk = std::max(rk, std::abs(row));
      }
      rp = std::max(rp, std::max(0.0, -min_eigenvalue(M)));
      const double norm = M.cwiseAbs().maxCoeff();
      // zero matrix ⟺ flow: residual 1 when the equivalence breaks
      if ((norm == 0.0) != flow) rv = 1.0;
    }
    update(symm, rs, tol, dump);
    update(psd, rp, tol, dump);
    update(kernel, rk, tol, dump);
    update(vanish, rv, 0.5, dump);
    update(paths, ra, tol, dump);
  }

  SuiteReport rep;
  rep.results = {leib, comm, assoc, module, commutator, flows, symm, psd, kernel, vanish, paths};
  return rep;
}

}  // namespace latkin
