#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "latkin/dynamics.hpp"
#include "latkin/errors.hpp"
#include "latkin/identity_suite.hpp"
#include "latkin/scenario.hpp"

namespace {

enum Exit : int { kOk = 0, kPropertyFailure = 1, kConfigError = 2, kDomainViolation = 3 };

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value config file");
  app->add_option("--out", c.out, "write CSV here instead of stdout");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--set", c.overrides, "override a config entry, key=value");
}

latkin::Config load_config(const Common& c) {
  latkin::Config cfg = c.config.empty() ? latkin::Config{} : latkin::Config::load(c.config);
  for (const auto& kv : c.overrides) cfg.set(kv);
  return cfg;
}

void emit(const Common& c, const std::string& csv) {
  if (c.out.empty()) {
    std::cout << csv;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw latkin::ConfigError("cannot write '" + c.out + "'");
  f << csv;
}

// Summary text goes to stdout when the CSV went to a file, otherwise stderr.
std::ostream& summary_stream(const Common& c) { return c.out.empty() ? std::cerr : std::cout; }

int algebra_check(const Common& c, std::size_t sizes, std::size_t instances, bool corrupt) {
  latkin::SuiteOptions opt;
  opt.seed = c.seed;
  if (sizes < 2) throw latkin::ConfigError("--sizes must be at least 2 (largest digraph size)");
  opt.max_sites = sizes;
  opt.graph_instances = instances;
  if (corrupt)
    opt.bullet = [](const latkin::OneForm& a, const latkin::OneForm& b) {
      latkin::OneForm w = latkin::bullet(a, b);
      for (auto& [e, v] : w.coeffs) v *= 1.5;
      return w;
    };
  const latkin::SuiteReport rep = latkin::run_identity_suite(opt);
  std::string csv = "identity,instances,max_residual,passed\n";
  for (const auto& r : rep.results)
    csv += "\"" + r.name + "\"," + std::to_string(r.instances) + "," + latkin::format_double(r.max_residual) + "," +
           (r.passed ? "true" : "false") + "\n";
  if (!c.out.empty()) emit(c, csv);
  std::cout << rep.text();
  return rep.all_passed() ? kOk : kPropertyFailure;
}

int simulate(const Common& c) {
  const auto cfg = latkin::ScenarioConfig::from(load_config(c));
  const latkin::MomentReport rep = latkin::simulate(cfg, c.jobs);
  emit(c, rep.csv());
  return kOk;
}

int converge(const Common& c) {
  const auto cfg = latkin::ScenarioConfig::from(load_config(c));
  const latkin::ConvergenceTable t = latkin::converge_scenario(cfg, c.jobs);
  emit(c, t.csv());
  auto& os = summary_stream(c);
  os << "analytic: " << t.analytic << "\n";
  if (t.rows.size() > 1 && !t.monotone) os << "warning: errors do not decrease monotonically\n";
  return kOk;
}

int kramers_gauge(const Common& c) {
  std::string csv = "family,conditions,free_parameters,constraint,eta22,residual_gauge_dimension\n";
  for (const auto& f : latkin::kramers_gauge_solve()) {
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "; " : "") + v[k];
      return s;
    };
    csv += f.name + ",\"" + join(f.conditions) + "\",\"" + join(f.free_parameters) + "\",\"" + f.constraint +
           "\",\"" + f.eta22 + "\"," + std::to_string(f.residual_gauge_dimension) + "\n";
  }
  emit(c, csv);
  const latkin::KramersGauge g = latkin::kramers_gauge({0, 1, 0, 1, 0, -1});
  // + 0.0 turns a signed zero into 0 for printing
  summary_stream(c) << "sample gauge (0,1,0; 1,0,-1): (p,q,r) = (" << g.p_hat + 0.0 << ", " << g.q_hat + 0.0 << ", "
                    << g.r_hat + 0.0 << "), eta22 = " << g.eta22 << " h22\n";
  return kOk;
}

int scaling_diagnose(const Common& c) {
  const latkin::ScalingDiagnosis d = latkin::scaling_diagnose(load_config(c));
  emit(c, latkin::report_csv(d.rows));
  summary_stream(c) << d.summary();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latkin: lattice calculus and discrete stochastic evolution"};
  app.require_subcommand(1);

  Common common;
  std::size_t sizes = 8, instances = 200;
  bool corrupt = false;

  auto* alg = app.add_subcommand("algebra-check", "run the identity suite on random digraphs and fields");
  add_common(alg, common);
  alg->add_option("--sizes", sizes, "largest digraph size");
  alg->add_option("--instances", instances, "number of random digraphs");
  alg->add_flag("--corrupt-bullet", corrupt)->group("");  // hidden hook for testing the failure path

  auto* sim = app.add_subcommand("simulate", "evolve a scenario and write per-step moments");
  add_common(sim, common);
  auto* conv = app.add_subcommand("converge", "compare lattice evolutions with a continuum solution");
  add_common(conv, common);
  auto* kg = app.add_subcommand("kramers-gauge", "enumerate the phase-space gauge families");
  add_common(kg, common);
  auto* sd = app.add_subcommand("scaling-diagnose", "order analysis of scaling partitions");
  add_common(sd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*alg) return algebra_check(common, sizes, instances, corrupt);
    if (*sim) return simulate(common);
    if (*conv) return converge(common);
    if (*kg) return kramers_gauge(common);
    if (*sd) return scaling_diagnose(common);
  } catch (const latkin::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const latkin::DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const latkin::SingularMatrix& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const latkin::UnsupportedInput& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const latkin::DomainViolation& e) {
    std::cerr << "domain violation: " << e.what() << "\n";
    return kDomainViolation;
  } catch (const latkin::BoundaryReached& e) {
    std::cerr << "boundary reached: " << e.what() << "\n";
    return kDomainViolation;
  } catch (const latkin::EvolutionExhausted& e) {
    std::cerr << "evolution exhausted: " << e.what() << "\n";
    return kDomainViolation;
  } catch (const latkin::OffLattice& e) {
    std::cerr << "domain violation: " << e.what() << "\n";
    return kDomainViolation;
  } catch (const latkin::Error& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kPropertyFailure;
  }
  return kConfigError;
}
