#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "latkin/charts.hpp"
#include "latkin/dynamics.hpp"
#include "latkin/evolve.hpp"
#include "latkin/scaling.hpp"

namespace latkin {

/** Flat `key = value` configuration; `#` starts a comment, lists are comma separated. */
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  // "key=value" override.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  long integer(const std::string& key, long fallback) const;
  const std::map<std::string, std::string>& values() const { return values_; }

  // ConfigError naming the first key outside `allowed`.
  void require_known(const std::set<std::string>& allowed) const;

 private:
  std::map<std::string, std::string> values_;
};

inline constexpr long kSchemaVersion = 1;

struct ScenarioConfig {
  std::string scenario = "diffusion1d";  // diffusion1d, smoluchowski, ou, kramers, randomwalk_nd, custom
  double eps = 0.05;
  std::vector<double> eps_grid;
  double T = 1.0;
  std::optional<std::size_t> steps;
  double h = 1.0, h11 = 0.0, h22 = 0.0;
  double gamma = 0.5, beta = 1.0;
  std::vector<double> force;
  Eigen::VectorXd x0;
  EvolutionMode mode = EvolutionMode::distribution;
  std::string start = "delta";          // delta | gaussian
  std::string observable = "gaussian";  // x | x2 | gaussian
  double s0 = 0.5;
  std::optional<PhysicalBox> window;
  std::size_t dim = 2;
  std::string chart = "simplex";  // randomwalk_nd: simplex | sign_flip
  std::array<double, 6> gauge{0, 1, 0, 1, 0, -1};
  std::vector<double> chart_A;  // custom, row-major (N+1)²
  std::vector<double> p;        // custom, uniform probabilities
  double flush_threshold = 0.0;
  std::optional<AnalyticSolution> analytic;
  double compare_window = 2.0;  // half-width compared by the observable oracles

  static ScenarioConfig from(const Config& c);
  std::size_t N() const;
};

struct BuiltScenario {
  ScalingFamily family;
  DriftSpec drift;
  std::optional<std::vector<double>> uniform_p;
  Eigen::MatrixXd diffusion;  // continuum η̂ for the moment oracles
};

BuiltScenario build_scenario(const ScenarioConfig& cfg);

// Throws DomainViolation if the drift probabilities leave [0,1] at a corner of
// the window. Only affine drifts are checked here: their probabilities are
// affine in x, so the corners decide.
void check_window_admissible(const DriftSpec& drift, const CoordinateChart& chart, const PhysicalBox& window);

MomentReport simulate(const ScenarioConfig& cfg, int jobs = 1);
ConvergenceTable converge_scenario(const ScenarioConfig& cfg, int jobs = 1);

struct ScalingDiagnosis {
  std::vector<ReportRow> rows;
  std::vector<ThetaReport> theta;
  std::string summary() const;
};

// Keys: partition (default | cubic), chart (lightcone | sign_flip | simplex), dim.
ScalingDiagnosis scaling_diagnose(const Config& c);

}  // namespace latkin
