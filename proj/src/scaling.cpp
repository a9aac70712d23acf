#include "latkin/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "latkin/errors.hpp"
#include "latkin/numerics.hpp"

namespace latkin {

namespace {
constexpr double kZero = 1e-14;
}

StructureConstants StructureConstants::zero(std::size_t D) {
  if (D == 0) throw DimensionError("structure constants need D >= 1");
  return {D, std::vector<double>(D * D * D, 0.0)};
}

StructureConstants StructureConstants::hypercubic(std::size_t D) {
  StructureConstants s = zero(D);
  for (std::size_t m = 0; m < D; ++m) s.at(m, m, m) = 1.0;
  return s;
}

StructureConstants StructureConstants::from_matrix(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols() || A.rows() == 0) throw DimensionError("chart matrix must be square");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw SingularMatrix("chart matrix is singular");
  const Eigen::MatrixXd B = lu.inverse();
  const auto D = static_cast<std::size_t>(A.rows());
  StructureConstants s = zero(D);
  for (std::size_t m = 0; m < D; ++m)
    for (std::size_t n = 0; n < D; ++n)
      for (std::size_t r = 0; r < D; ++r) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < A.cols(); ++k)
          acc += A(static_cast<Eigen::Index>(m), k) * A(static_cast<Eigen::Index>(n), k) * B(k, static_cast<Eigen::Index>(r));
        s.at(m, n, r) = acc;
      }
  return s;
}

double StructureConstants::associativity_residual() const {
  double worst = 0.0;
  for (std::size_t m = 0; m < D; ++m)
    for (std::size_t n = 0; n < D; ++n)
      for (std::size_t l = 0; l < D; ++l)
        for (std::size_t s = 0; s < D; ++s) {
          double left = 0.0, right = 0.0;
          for (std::size_t r = 0; r < D; ++r) {
            left += (*this)(m, n, r) * (*this)(r, l, s);
            right += (*this)(n, l, r) * (*this)(m, r, s);
          }
          worst = std::max(worst, std::abs(left - right));
        }
  return worst;
}

double StructureConstants::commutativity_residual() const {
  double worst = 0.0;
  for (std::size_t m = 0; m < D; ++m)
    for (std::size_t n = 0; n < D; ++n)
      for (std::size_t r = 0; r < D; ++r) worst = std::max(worst, std::abs((*this)(m, n, r) - (*this)(n, m, r)));
  return worst;
}

ScalingPartition::ScalingPartition(std::size_t D, std::vector<ScalingGroup> groups)
    : D_(D), groups_(std::move(groups)), group_of_(D, groups_.size()) {
  if (D == 0) throw ConfigError("partition needs at least one coordinate");
  if (groups_.size() < 2) throw ConfigError("partition needs a time group and at least one other group");
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].exponent < 1) throw ConfigError("group '" + groups_[g].name + "' needs a positive exponent");
    if (groups_[g].indices.empty()) throw ConfigError("group '" + groups_[g].name + "' is empty");
    for (std::size_t i : groups_[g].indices) {
      if (i >= D) throw ConfigError("group '" + groups_[g].name + "' has index out of range");
      if (group_of_[i] != groups_.size()) throw ConfigError("index " + std::to_string(i) + " is in two groups");
      group_of_[i] = g;
    }
  }
  for (std::size_t i = 0; i < D; ++i)
    if (group_of_[i] == groups_.size()) throw ConfigError("index " + std::to_string(i) + " is in no group");
  const int te = groups_[group_of_[0]].exponent;
  for (std::size_t g = 0; g < groups_.size(); ++g)
    if (g != group_of_[0] && groups_[g].exponent >= te)
      throw ConfigError("time group must scale strictly faster than group '" + groups_[g].name + "'");

  // Letters: time gets "abc"; the others by increasing exponent.
  static const char* pool[] = {"ijk", "rst", "pqw", "efg", "lmn"};
  letters_.assign(groups_.size(), "");
  letters_[group_of_[0]] = "abc";
  std::vector<std::size_t> order;
  for (std::size_t g = 0; g < groups_.size(); ++g)
    if (g != group_of_[0]) order.push_back(g);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return groups_[x].exponent < groups_[y].exponent; });
  for (std::size_t k = 0; k < order.size(); ++k) letters_[order[k]] = pool[std::min<std::size_t>(k, 4)];
}

char ScalingPartition::letter(std::size_t group, int which) const {
  return letters_[group][static_cast<std::size_t>(which) % 3];
}

ScalingPartition ScalingPartition::two_group(std::size_t D) {
  std::vector<std::size_t> space;
  for (std::size_t i = 1; i < D; ++i) space.push_back(i);
  return ScalingPartition(D, {{"time", {0}, 2}, {"space", space, 1}});
}

ScalingPartition ScalingPartition::cubic_two_group(std::size_t D) {
  std::vector<std::size_t> space;
  for (std::size_t i = 1; i < D; ++i) space.push_back(i);
  return ScalingPartition(D, {{"time", {0}, 3}, {"space", space, 1}});
}

ScalingPartition ScalingPartition::three_group(std::size_t D, const std::vector<std::size_t>& y) {
  std::vector<std::size_t> x;
  for (std::size_t i = 1; i < D; ++i)
    if (std::find(y.begin(), y.end(), i) == y.end()) x.push_back(i);
  return ScalingPartition(D, {{"time", {0}, 3}, {"y", y, 2}, {"x", x, 1}});
}

std::string to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::ok: return "ok";
    case VerdictStatus::requires_constraint: return "requires_constraint";
    case VerdictStatus::diverges: return "diverges";
  }
  return "?";
}

namespace {

struct Bookkeeper {
  const StructureConstants& C;
  const ScalingPartition& part;
  const OrderOptions& opt;

  int constraint_order(std::size_t m, std::size_t n, std::size_t r) const {
    const std::size_t gm = part.group_of(m), gn = part.group_of(n), gr = part.group_of(r);
    int k = 0;
    for (const auto& c : opt.constraints)
      if (c.group_rho == gr && ((c.group_mu == gm && c.group_nu == gn) || (c.group_mu == gn && c.group_nu == gm)))
        k += c.order;
    return k;
  }

  // Commutation coefficient symbol at group level, faster-scaling group first.
  std::string symbol(std::size_t m, std::size_t n, std::size_t r) const {
    std::size_t gm = part.group_of(m), gn = part.group_of(n);
    const std::size_t gr = part.group_of(r);
    if (part.groups()[gn].exponent > part.groups()[gm].exponent) std::swap(gm, gn);
    std::map<std::size_t, int> used;
    std::string s = "C^{";
    s += part.letter(gm, used[gm]++);
    s += part.letter(gn, used[gn]++);
    s += "}_";
    s += part.letter(gr, used[gr]++);
    return s;
  }
};

}  // namespace

ScalingVerdict order_analysis(const StructureConstants& C, const ScalingPartition& part, const OrderOptions& opt) {
  if (C.D != part.D()) throw DimensionError("structure constants and partition have different dimension");
  for (const auto& c : opt.constraints)
    if (c.group_mu >= part.groups().size() || c.group_nu >= part.groups().size() ||
        c.group_rho >= part.groups().size())
      throw ConfigError("constraint refers to an unknown group");
  const std::size_t D = C.D;
  const Bookkeeper bk{C, part, opt};
  auto e = [&](std::size_t i) { return part.exponent(i); };

  ScalingVerdict v;
  v.limit_table = StructureConstants::zero(D);
  std::set<std::string> divergent_symbols;
  std::map<std::string, int> needed;  // symbol -> constraint order

  auto record = [&](TermOrder t, const std::string& sym) {
    if (t.order < 0) {
      if (divergent_symbols.insert(sym).second) v.divergent_terms.push_back({sym, t.order});
      needed[sym] = std::max(needed[sym], -t.order);
    }
    v.terms.push_back(std::move(t));
  };

  for (std::size_t m = 0; m < D; ++m)
    for (std::size_t n = 0; n < D; ++n)
      for (std::size_t r = 0; r < D; ++r) {
        const double c = C(m, n, r);
        if (std::abs(c) <= kZero) continue;
        const int ord = e(m) + e(n) - e(r) + bk.constraint_order(m, n, r);
        if (ord == 0) v.limit_table.at(m, n, r) = c;
        record({TermKind::commutation, {m, n, r}, ord, c}, bk.symbol(m, n, r));
        record({TermKind::expansion, {m, n, r}, ord, 0.5 * c}, bk.symbol(m, n, r));
      }

  // Cubic terms: Σ_ν C^{μ1μ2}_ν C^{μ3ν}_ρ, binned by order since constraints act per factor.
  for (std::size_t m1 = 0; m1 < D; ++m1)
    for (std::size_t m2 = 0; m2 < D; ++m2)
      for (std::size_t m3 = 0; m3 < D; ++m3)
        for (std::size_t r = 0; r < D; ++r) {
          std::map<int, double> bins;
          std::map<int, std::string> bin_symbol;
          for (std::size_t nu = 0; nu < D; ++nu) {
            const double c = C(m1, m2, nu) * C(m3, nu, r);
            if (std::abs(c) <= kZero * kZero) continue;
            const int ord = e(m1) + e(m2) + e(m3) - e(r) + bk.constraint_order(m1, m2, nu) +
                            bk.constraint_order(m3, nu, r);
            bins[ord] += c;
            if (!bin_symbol.count(ord)) bin_symbol[ord] = bk.symbol(m1, m2, nu) + " " + bk.symbol(m3, nu, r);
          }
          for (const auto& [ord, sum] : bins) {
            if (std::abs(sum) <= kZero) continue;
            record({TermKind::expansion, {m1, m2, m3, r}, ord, sum / 6.0}, bin_symbol[ord]);
            break;
          }
        }

  std::vector<std::size_t> space;
  for (std::size_t i = 0; i < D; ++i)
    if (!part.is_time(i)) space.push_back(i);
  v.second_order = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(space.size()), static_cast<Eigen::Index>(space.size()));
  for (const auto& t : v.terms) {
    if (t.kind != TermKind::expansion || t.order != 0) continue;
    const std::size_t r = t.indices.back();
    if (!part.is_time(r)) continue;
    const int rank = static_cast<int>(t.indices.size()) - 1;
    v.highest_order = std::max(v.highest_order, rank);
    if (rank == 2 && r == 0 && !part.is_time(t.indices[0]) && !part.is_time(t.indices[1])) {
      const auto i = std::find(space.begin(), space.end(), t.indices[0]) - space.begin();
      const auto j = std::find(space.begin(), space.end(), t.indices[1]) - space.begin();
      v.second_order(i, j) += t.coefficient;
    }
  }

  if (!v.divergent_terms.empty()) {
    v.status = opt.allow_constraints ? VerdictStatus::requires_constraint : VerdictStatus::diverges;
    for (const auto& [sym, k] : needed) {
      if (sym.find(' ') != std::string::npos) continue;  // products follow from their factors
      std::string K = sym;
      K[0] = 'K';
      v.required_constraints.push_back(sym + " = " + (k == 1 ? "λ" : "λ^" + std::to_string(k)) + "·" + K);
    }
  }
  return v;
}

double truncated_expansion(const StructureConstants& C, std::size_t rho, const std::vector<double>& grad,
                           const std::vector<double>& hess, const std::vector<double>& third) {
  const std::size_t D = C.D;
  if (grad.size() != D || hess.size() != D * D || third.size() != D * D * D)
    throw DimensionError("derivative arrays do not match structure constants");
  double acc = grad[rho];
  for (std::size_t m = 0; m < D; ++m)
    for (std::size_t n = 0; n < D; ++n) acc += 0.5 * C(m, n, rho) * hess[m * D + n];
  for (std::size_t m1 = 0; m1 < D; ++m1)
    for (std::size_t m2 = 0; m2 < D; ++m2)
      for (std::size_t m3 = 0; m3 < D; ++m3) {
        double chain = 0.0;
        for (std::size_t nu = 0; nu < D; ++nu) chain += C(m1, m2, nu) * C(m3, nu, rho);
        acc += chain / 6.0 * third[(m1 * D + m2) * D + m3];
      }
  return acc;
}

std::vector<ReportRow> second_order_uniqueness_report(const std::vector<ReportFamily>& families) {
  bool has_sqrt = false, has_cubic = false;
  for (const auto& f : families) {
    const int te = f.partition.groups()[f.partition.time_group()].exponent;
    has_sqrt = has_sqrt || (te == 2 && f.partition.groups().size() == 2);
    has_cubic = has_cubic || te == 3;
  }
  if (!has_sqrt || !has_cubic) throw ConfigError("report needs a square-root scaling family and a cubic one");

  std::vector<ReportRow> rows;
  for (const auto& f : families) {
    const ScalingVerdict v = order_analysis(f.C, f.partition, f.options);
    ReportRow row;
    row.name = f.name;
    row.status = v.status;
    row.limit_exists = v.status == VerdictStatus::ok;
    row.highest_order = v.highest_order;
    // A surviving odd-order leading term is never semidefinite.
    row.psd = row.limit_exists && v.highest_order <= 2 &&
              (v.second_order.size() == 0 || min_eigenvalue(v.second_order) >= -1e-12);
    for (const auto& d : v.divergent_terms) row.notes.push_back("divergent " + d.symbol);
    for (const auto& c : v.required_constraints) row.notes.push_back("needs " + c);
    for (const auto& c : f.options.constraints) {
      std::ostringstream os;
      os << "imposed C^{" << f.partition.letter(c.group_mu, 0)
         << f.partition.letter(c.group_nu, c.group_mu == c.group_nu ? 1 : 0) << "}_"
         << f.partition.letter(c.group_rho, 0) << " = O(λ^" << c.order << ")";
      row.notes.push_back(os.str());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << "family,status,limit_exists,psd,highest_order,notes\n";
  for (const auto& r : rows) {
    os << r.name << "," << to_string(r.status) << "," << (r.limit_exists ? "true" : "false") << ","
       << (r.psd ? "true" : "false") << "," << r.highest_order << ",\"";
    for (std::size_t k = 0; k < r.notes.size(); ++k) os << (k ? "; " : "") << r.notes[k];
    os << "\"\n";
  }
  return os.str();
}

std::pair<double, double> theta_at(const Eigen::MatrixXd& A, const Eigen::VectorXd& alpha, double beta,
                                   const Eigen::VectorXd& xi) {
  const Eigen::Index N = alpha.size();
  if (A.rows() != N + 1 || A.cols() != N + 1 || xi.size() != N) throw DimensionError("theta: shapes disagree");
  if (!(beta > 0)) throw ConfigError("theta needs beta > 0");
  const Eigen::MatrixXd B = A.inverse();
  double t2 = 0.0, t3 = 0.0;
  for (Eigen::Index mu = 0; mu <= N; ++mu) {
    double Am = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) Am += alpha(j) * A(j + 1, mu) * xi(j);
    t2 += Am * Am * B(mu, 0);
    t3 += Am * Am * Am * B(mu, 0);
  }
  return {t2 / (2.0 * beta), t3 / 6.0};
}

ThetaReport theta_functionals(const CubicFamily& family, const std::vector<Eigen::VectorXd>& directions,
                              const std::vector<double>& beta_grid) {
  if (!is_strictly_decreasing(beta_grid) || beta_grid.size() < 2)
    throw ConfigError("theta grid needs at least two strictly decreasing scales");
  if (directions.empty()) throw ConfigError("theta needs at least one direction");
  ThetaReport rep;
  rep.name = family.name;
  rep.betas = beta_grid;
  const Eigen::Index N = family.alpha.size();
  for (const auto& xi : directions) rep.series.push_back({xi, {}, {}, {}});
  rep.max_theta2.assign(beta_grid.size(), 0.0);
  rep.max_theta3.assign(beta_grid.size(), 0.0);

  for (std::size_t k = 0; k < beta_grid.size(); ++k) {
    const double beta = beta_grid[k];
    const Eigen::MatrixXd A = family.A(beta);
    const Eigen::MatrixXd B = A.inverse();
    double M = 0.0;
    for (Eigen::Index mu = 0; mu <= N; ++mu) {
      double n2 = 0.0;
      for (Eigen::Index j = 0; j < N; ++j) n2 += std::pow(family.alpha(j) * A(j + 1, mu), 2);
      M = std::max(M, std::sqrt(n2));
    }
    for (auto& s : rep.series) {
      const auto [t2, t3] = theta_at(A, family.alpha, beta, s.xi);
      double weighted = 0.0;
      for (Eigen::Index mu = 0; mu <= N; ++mu) {
        double Am = 0.0;
        for (Eigen::Index j = 0; j < N; ++j) Am += family.alpha(j) * A(j + 1, mu) * s.xi(j);
        weighted += Am * Am * std::abs(B(mu, 0));
      }
      const double bound = M * s.xi.norm() / 6.0 * weighted;
      s.theta2.push_back(t2);
      s.theta3.push_back(t3);
      s.schwarz_bound.push_back(bound);
      rep.schwarz_holds = rep.schwarz_holds && std::abs(t3) <= bound * (1 + 1e-12) + 1e-15;
      rep.max_theta2[k] = std::max(rep.max_theta2[k], std::abs(t2));
      rep.max_theta3[k] = std::max(rep.max_theta3[k], std::abs(t3));
    }
  }

  // B̂ from the β → 0 matrix when it is invertible, otherwise the finest β.
  Eigen::MatrixXd Ahat = family.A(0.0);
  if (std::abs(Ahat.determinant()) < 1e-12) Ahat = family.A(beta_grid.back());
  rep.b_hat_nonnegative = Ahat.inverse().col(0).minCoeff() >= -1e-12;

  const std::size_t L = beta_grid.size() - 1;
  const double r2 = rep.max_theta2[L - 1] > 0 ? rep.max_theta2[L] / rep.max_theta2[L - 1] : (rep.max_theta2[L] > 0 ? 1e300 : 0.0);
  rep.theta2_bounded = r2 < 2.0;
  rep.theta3_vanishing = rep.max_theta3[L] <= 1e-12 ||
                         (rep.max_theta3[L - 1] > 0 && rep.max_theta3[L] / rep.max_theta3[L - 1] <= 0.75);

  if (!rep.b_hat_nonnegative) {
    rep.diagnostic = "implication not guaranteed: limiting B^mu_0 has negative entries";
  } else if (!rep.theta2_bounded) {
    rep.diagnostic = "theta2 diverges: no cubic continuum limit for this family";
  } else if (rep.theta3_vanishing) {
    rep.implication_verified = true;
    rep.diagnostic = "theta2 bounded and theta3 -> 0";
  } else {
    rep.diagnostic = "implication violated: theta2 bounded but theta3 does not vanish";
  }
  return rep;
}

}  // namespace latkin
