#include "latkin/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "latkin/errors.hpp"

namespace latkin {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_number(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d))
    throw ConfigError("config key '" + key + "': not a finite number: '" + raw + "'");
  return d;
}

const std::set<std::string> kKnownKeys = {
    "schema_version", "scenario", "eps", "eps_grid", "T", "steps", "h", "h11", "h22", "gamma", "beta",
    "force", "x0", "mode", "start", "observable", "s0", "window", "window_lo", "window_hi", "dim", "chart",
    "gauge", "chart_A", "p", "flush_threshold", "analytic", "compare_window"};

std::vector<double> default_grid(const std::string& scenario) {
  if (scenario == "ou") return {0.05, 0.025, 0.0125};
  if (scenario == "kramers") return {0.02, 0.01, 0.005};
  return {0.1, 0.05, 0.025};
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd broadcast(const std::string& key, const std::vector<double>& v, std::size_t N) {
  if (v.size() == 1) return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(N), v[0]);
  if (v.size() != N)
    throw ConfigError("config key '" + key + "': expected 1 or " + std::to_string(N) + " values, got " +
                      std::to_string(v.size()));
  return to_vector(v);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty())
    throw ConfigError("override '" + assignment + "' is not key=value");
  values_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::number(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : to_number(key, it->second);
}

std::vector<double> Config::numbers(const std::string& key, const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_number(key, item));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

long Config::integer(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const double d = number(key, 0.0);
  if (d != std::floor(d) || std::abs(d) > 1e15) throw ConfigError("config key '" + key + "': not an integer");
  return static_cast<long>(d);
}

void Config::require_known(const std::set<std::string>& allowed) const {
  for (const auto& [k, v] : values_)
    if (!allowed.count(k)) throw ConfigError("unknown config key '" + k + "'");
}

std::size_t ScenarioConfig::N() const {
  if (scenario == "kramers") return 2;
  if (scenario == "randomwalk_nd") return dim;
  if (scenario == "custom") {
    const auto D = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(chart_A.size()))));
    return D == 0 ? 0 : D - 1;
  }
  return 1;
}

ScenarioConfig ScenarioConfig::from(const Config& c) {
  c.require_known(kKnownKeys);
  if (c.integer("schema_version", kSchemaVersion) != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + c.text("schema_version", "") + " (expected 1)");

  ScenarioConfig s;
  s.scenario = c.text("scenario", s.scenario);
  static const std::set<std::string> scenarios = {"diffusion1d", "smoluchowski", "ou",
                                                  "kramers",     "randomwalk_nd", "custom"};
  if (!scenarios.count(s.scenario)) throw ConfigError("unknown scenario '" + s.scenario + "'");

  s.eps = c.number("eps", s.eps);
  if (!(s.eps > 0)) throw ConfigError("eps must be positive");
  s.eps_grid = c.numbers("eps_grid", default_grid(s.scenario));
  for (double e : s.eps_grid)
    if (!(e > 0)) throw ConfigError("eps_grid entries must be positive");
  // Kramers: short horizon so the velocity stays well above zero, where this
  // gauge's probabilities are valid.
  s.T = c.number("T", s.scenario == "kramers" ? 0.05 : 1.0);
  if (!(s.T >= 0)) throw ConfigError("T must be nonnegative");
  if (c.has("steps")) {
    const long n = c.integer("steps", 0);
    if (n < 0) throw ConfigError("steps must be nonnegative");
    s.steps = static_cast<std::size_t>(n);
  }

  s.h = c.number("h", 1.0);
  s.h11 = c.number("h11", 1.0);
  s.h22 = c.number("h22", 1.0);
  if (!(s.h > 0 && s.h11 > 0 && s.h22 > 0)) throw ConfigError("diffusion scales h, h11, h22 must be positive");
  s.gamma = c.number("gamma", 0.5);
  s.beta = c.number("beta", s.scenario == "kramers" ? 0.5 : 1.0);
  if (s.beta < 0) throw ConfigError("beta must be nonnegative");
  s.force = c.numbers("force", {0.0, -1.0});
  s.dim = static_cast<std::size_t>(c.integer("dim", 2));
  if (s.dim < 1 || s.dim > 8) throw ConfigError("dim must be within 1..8");
  s.chart = c.text("chart", "simplex");
  if (s.chart != "simplex" && s.chart != "sign_flip") throw ConfigError("chart must be simplex or sign_flip");
  if (c.has("gauge")) {
    const auto g = c.numbers("gauge", {});
    if (g.size() != 6) throw ConfigError("gauge needs six entries kappa,lambda,mu,kappa',lambda',mu'");
    std::copy(g.begin(), g.end(), s.gauge.begin());
  }
  s.chart_A = c.numbers("chart_A", {});
  s.p = c.numbers("p", {});
  if (s.scenario == "custom") {
    const std::size_t D = s.N() + 1;
    if (s.N() < 1 || D * D != s.chart_A.size()) throw ConfigError("chart_A must hold (N+1)^2 entries with N >= 1");
    if (s.p.size() != D) throw ConfigError("p must hold N+1 probabilities");
  }

  const std::size_t N = s.N();
  std::vector<double> x0_default(N, 0.0);
  if (s.scenario == "ou") x0_default = {1.0};
  if (s.scenario == "kramers") x0_default = {0.0, 2.0};
  s.x0 = broadcast("x0", c.numbers("x0", x0_default), N);

  const std::string mode = c.text("mode", "distribution");
  if (mode == "distribution")
    s.mode = EvolutionMode::distribution;
  else if (mode == "observable")
    s.mode = EvolutionMode::observable;
  else
    throw ConfigError("mode must be distribution or observable");
  s.start = c.text("start", "delta");
  if (s.start != "delta" && s.start != "gaussian") throw ConfigError("start must be delta or gaussian");
  s.observable = c.text("observable", "gaussian");
  if (s.observable != "x" && s.observable != "x2" && s.observable != "gaussian")
    throw ConfigError("observable must be x, x2 or gaussian");
  s.s0 = c.number("s0", 0.5);
  if (!(s.s0 > 0)) throw ConfigError("s0 must be positive");

  if (c.has("window")) {
    const Eigen::VectorXd w = broadcast("window", c.numbers("window", {}), N);
    if ((w.array() <= 0).any()) throw ConfigError("window half-widths must be positive");
    s.window = PhysicalBox{-w, w};
  }
  if (c.has("window_lo") || c.has("window_hi")) {
    if (s.window) throw ConfigError("use either window or window_lo/window_hi");
    if (!c.has("window_lo") || !c.has("window_hi")) throw ConfigError("window_lo and window_hi go together");
    PhysicalBox b{broadcast("window_lo", c.numbers("window_lo", {}), N),
                  broadcast("window_hi", c.numbers("window_hi", {}), N)};
    if ((b.hi.array() <= b.lo.array()).any()) throw ConfigError("window_hi must exceed window_lo");
    s.window = b;
  }

  // Without a flush the lattice support of a distribution grows by one site per
  // step on every axis; one-dimensional runs can afford to keep it exact.
  const double flush_default = s.scenario == "kramers" ? 1e-20 : (N > 1 ? 1e-30 : 0.0);
  s.flush_threshold = c.number("flush_threshold", flush_default);
  if (s.flush_threshold < 0) throw ConfigError("flush_threshold must be nonnegative");
  if (c.has("analytic")) {
    try {
      s.analytic = parse_analytic(c.text("analytic", ""));
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  s.compare_window = c.number("compare_window", 2.0);
  if (!(s.compare_window > 0)) throw ConfigError("compare_window must be positive");
  return s;
}

BuiltScenario build_scenario(const ScenarioConfig& cfg) {
  const std::size_t N = cfg.N();
  BuiltScenario out{ScalingFamily{}, DriftSpec::free(N), std::nullopt, Eigen::MatrixXd()};
  const std::string& sc = cfg.scenario;
  if (sc == "diffusion1d" || sc == "smoluchowski" || sc == "ou") {
    out.family = standard_family(sc, lightcone_matrix(), Eigen::VectorXd::Constant(1, cfg.h));
    if (sc == "smoluchowski") out.drift = DriftSpec::constant_force(cfg.gamma, cfg.h);
    if (sc == "ou") out.drift = DriftSpec::ornstein_uhlenbeck(cfg.beta, 1);
  } else if (sc == "kramers") {
    const auto gauge = cfg.gauge;
    const double s11 = std::sqrt(cfg.h11), s22 = std::sqrt(cfg.h22);
    Eigen::MatrixXd A(3, 3);
    A << 1, 1, 1, gauge[0], gauge[1], gauge[2], gauge[3], gauge[4], gauge[5];
    out.family.name = "kramers";
    out.family.hat_A = A;
    out.family.chart_at = [gauge, s11, s22](double e) { return make_kramers_chart(gauge, s11 * e, s22 * e, e * e); };
    out.drift = DriftSpec::kramers(cfg.beta, cfg.force);
  } else if (sc == "randomwalk_nd") {
    const Eigen::MatrixXd A = cfg.chart == "simplex" ? simplex_matrix(N) : sign_flip_matrix(N);
    out.family = standard_family("randomwalk_nd", A, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(N), cfg.h));
  } else {
    const std::size_t D = N + 1;
    Eigen::MatrixXd A(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D));
    for (std::size_t r = 0; r < D; ++r)
      for (std::size_t c = 0; c < D; ++c)
        A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cfg.chart_A[r * D + c];
    out.family = standard_family("custom", A, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(N), cfg.h));
    out.uniform_p = cfg.p;
  }
  // a_i a_j / b does not depend on ε in these families, so η at ε = 1 is the limit.
  out.diffusion = diffusion_matrix(out.family.chart_at(1.0));
  return out;
}

void check_window_admissible(const DriftSpec& drift, const CoordinateChart& chart, const PhysicalBox& window) {
  if (!drift.affine) return;
  const std::size_t N = chart.N();
  if (N > 20) return;
  for (std::size_t mask = 0; mask < (std::size_t{1} << N); ++mask) {
    Eigen::VectorXd point(static_cast<Eigen::Index>(N + 1));
    point(0) = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      point(k + 1) = (mask >> i) & 1 ? window.hi(k) : window.lo(k);
    }
    const Eigen::VectorXd P = probabilities_at(drift, chart, point);
    if ((P.array() < -1e-12).any() || (P.array() > 1 + 1e-12).any()) {
      std::ostringstream os;
      os << "window corner x = (";
      for (std::size_t i = 0; i < N; ++i) os << (i ? ", " : "") << point(static_cast<Eigen::Index>(i + 1));
      os << ") lies outside the admissible region; " << describe_extent(admissible_extent(drift, chart));
      throw DomainViolation(os.str());
    }
  }
}

MomentReport simulate(const ScenarioConfig& cfg, int jobs) {
  const BuiltScenario sc = build_scenario(cfg);
  const CoordinateChart chart = sc.family.chart_at(cfg.eps);
  RunOptions opt;
  opt.mode = cfg.mode;
  opt.steps = cfg.steps ? *cfg.steps : steps_for_horizon(cfg.T, chart.b());
  opt.jobs = jobs;
  opt.flush_threshold = cfg.flush_threshold;

  Slice initial;
  if (cfg.mode == EvolutionMode::distribution) {
    opt.window = cfg.window;
    if (cfg.window && !sc.uniform_p) check_window_admissible(sc.drift, chart, *cfg.window);
    if (cfg.start == "delta") {
      initial = delta_slice(chart, cfg.x0).slice;
    } else {
      if (!cfg.window) throw ConfigError("a gaussian start needs a window");
      const Eigen::VectorXd sd = Eigen::VectorXd::Constant(cfg.x0.size(), cfg.s0);
      initial = gaussian_distribution(chart, cfg.x0, sd, *cfg.window);
    }
  } else {
    if (!cfg.window) throw ConfigError("observable mode needs a window");
    const double s0 = cfg.s0;
    std::function<double(const Eigen::VectorXd&)> f;
    if (cfg.observable == "x")
      f = [](const Eigen::VectorXd& x) { return x(0); };
    else if (cfg.observable == "x2")
      f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    else
      f = [s0](const Eigen::VectorXd& x) { return std::exp(-x.squaredNorm() / (2 * s0 * s0)); };
    initial = observable_slice(chart, f, *cfg.window, opt.steps);
  }
  return sc.uniform_p ? run_scenario(std::move(initial), *sc.uniform_p, chart, opt)
                      : run_scenario(std::move(initial), sc.drift, chart, opt);
}

ConvergenceTable converge_scenario(const ScenarioConfig& cfg, int jobs) {
  const BuiltScenario sc = build_scenario(cfg);
  AnalyticSolution analytic;
  if (cfg.analytic)
    analytic = *cfg.analytic;
  else if (cfg.scenario == "diffusion1d")
    analytic = AnalyticSolution::heat_kernel;
  else if (cfg.scenario == "smoluchowski")
    analytic = AnalyticSolution::smoluchowski_const;
  else if (cfg.scenario == "ou")
    analytic = AnalyticSolution::ou;
  else if (cfg.scenario == "kramers")
    analytic = AnalyticSolution::kramers_moments;
  else
    throw ConfigError("scenario '" + cfg.scenario + "' has no analytic reference; set analytic=");
  if (sc.uniform_p) throw ConfigError("converge needs a drift-driven scenario");

  ConvergeSetup setup;
  setup.T = cfg.T;
  setup.x0 = cfg.x0;
  setup.s0 = cfg.s0;
  setup.window = cfg.compare_window;
  setup.flush_threshold = cfg.flush_threshold;
  setup.diffusion = sc.diffusion;
  setup.jobs = jobs;
  return converge(sc.family, sc.drift, analytic, cfg.eps_grid, setup);
}

namespace {

ReportFamily report_family(std::string name, StructureConstants C, ScalingPartition part, OrderOptions opt = {}) {
  return ReportFamily{std::move(name), std::move(C), std::move(part), std::move(opt)};
}

}  // namespace

ScalingDiagnosis scaling_diagnose(const Config& c) {
  c.require_known({"schema_version", "partition", "chart", "dim"});
  if (c.integer("schema_version", kSchemaVersion) != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + c.text("schema_version", "") + " (expected 1)");
  const std::string partition = c.text("partition", "default");
  if (partition != "default" && partition != "cubic") throw ConfigError("partition must be default or cubic");
  const std::string chart = c.text("chart", "sign_flip");
  const long dim = c.integer("dim", chart == "lightcone" ? 1 : 2);
  if (dim < 1 || dim > 6) throw ConfigError("dim must be within 1..6");
  const auto N = static_cast<std::size_t>(dim);
  Eigen::MatrixXd A;
  if (chart == "lightcone") {
    if (N != 1) throw ConfigError("the lightcone chart is one-dimensional");
    A = lightcone_matrix();
  } else if (chart == "sign_flip") {
    A = sign_flip_matrix(N);
  } else if (chart == "simplex") {
    A = simplex_matrix(N);
  } else {
    throw ConfigError("chart must be lightcone, sign_flip or simplex");
  }
  const std::size_t D = N + 1;
  const StructureConstants C = StructureConstants::from_matrix(A);

  std::vector<ReportFamily> fams;
  if (partition == "default") {
    fams.push_back(report_family("sqrt_two_group", C, ScalingPartition::two_group(D)));
    fams.push_back(report_family("cubic_two_group", C, ScalingPartition::cubic_two_group(D)));
    if (N >= 2) {
      OrderOptions opt;
      opt.constraints.push_back(ImposedConstraint{2, 2, 0, 1});  // C^{ij}_a = O(λ)
      fams.push_back(report_family("three_group_constrained", C, ScalingPartition::three_group(D, {N}), opt));
    }
    fams.push_back(report_family("ordinary_calculus", StructureConstants::zero(D), ScalingPartition::two_group(D)));
  } else {
    // The report wants a square-root family for contrast; only cubic rows are kept.
    fams.push_back(report_family("sqrt_two_group", C, ScalingPartition::two_group(D)));
    fams.push_back(report_family("cubic_two_group", C, ScalingPartition::cubic_two_group(D)));
    if (N >= 2) fams.push_back(report_family("three_group", C, ScalingPartition::three_group(D, {N})));
  }
  ScalingDiagnosis out;
  out.rows = second_order_uniqueness_report(fams);
  if (partition == "cubic") out.rows.erase(out.rows.begin());

  const std::vector<Eigen::VectorXd> dirs = {Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, -1.0)};
  const Eigen::VectorXd alpha = Eigen::VectorXd::Ones(1);
  out.theta.push_back(theta_functionals({"lightcone_cubic", alpha, [](double) { return lightcone_matrix(); }}, dirs));
  out.theta.push_back(theta_functionals({"tilted_lightcone", alpha,
                                         [](double beta) {
                                           Eigen::MatrixXd M(2, 2);
                                           M << 1, 1, beta, -1;
                                           return M;
                                         }},
                                        dirs));
  return out;
}

std::string ScalingDiagnosis::summary() const {
  std::ostringstream os;
  for (const auto& r : rows) {
    os << r.name << ": " << to_string(r.status);
    if (r.limit_exists) os << ", highest order " << r.highest_order << (r.psd ? ", semidefinite" : ", not semidefinite");
    for (const auto& n : r.notes) os << "; " << n;
    os << "\n";
  }
  for (const auto& t : theta) os << t.name << ": " << t.diagnostic << "\n";
  return os.str();
}

}  // namespace latkin
