#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "latkin/charts.hpp"
#include "latkin/dynamics.hpp"
#include "latkin/lattice.hpp"

namespace latkin {

/**
 * Field on a constant-t hyperplane Σ_μ u^μ = layer, indexed by v = (u^1..u^N);
 * u^0 is implied. Lattice time is −b·layer, `t` is the elapsed time n·b.
 */
struct Slice {
  Grid grid;
  std::vector<double> values;
  Box valid;
  std::int64_t layer = 0;
  double t = 0.0;
  double flushed = 0.0;  // total |mass| zeroed by the flush threshold so far
};

struct PhysicalBox {
  Eigen::VectorXd lo, hi;
  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;
};

/** Spatial position of slice sites: x = a∘(c·layer + M v), with c = A_x col 0. */
class SliceGeometry {
 public:
  explicit SliceGeometry(const CoordinateChart& chart);

  std::size_t N() const { return N_; }
  Eigen::VectorXd position(std::int64_t layer, std::span<const std::int64_t> v) const;
  void position(std::int64_t layer, std::span<const std::int64_t> v, double* out) const;
  // Real-valued v whose image at `layer` is x.
  Eigen::VectorXd slice_coordinates(std::int64_t layer, const Eigen::VectorXd& x) const;
  // Smallest integer box of v whose images at `layer` cover the physical box.
  Box cover(const PhysicalBox& box, std::int64_t layer) const;

 private:
  std::size_t N_;
  Eigen::VectorXd a_, c_;
  Eigen::MatrixXd M_, Minv_;
};

// Observable step: f_new(v) = Σ_μ P^μ(v) f(v + shift_μ), shift_0 = 0, shift_i = ê_i.
// Output lives on [valid.lo, valid.hi − 1] one layer down; X must cover it.
Slice step_observable(const Slice& s, const ProbabilityVectorField& X, const CoordinateChart& chart, int jobs = 1);

// Adjoint step: σ_new(v′) = Σ_μ P^μ(v′ − shift_μ) σ(v′ − shift_μ), on [lo, hi + 1]
// one layer up. X must cover every site carrying mass. Values with magnitude
// below `flush_threshold` are zeroed and accounted in Slice::flushed.
Slice step_distribution(const Slice& s, const ProbabilityVectorField& X, const CoordinateChart& chart, int jobs = 1,
                        double flush_threshold = 0.0);

// Drift probabilities at the sites of `grid` on `layer`. With `occupancy`, only
// sites with nonzero entries are evaluated and checked; the rest hold (1, 0, ..., 0).
ProbabilityVectorField slice_probabilities(const DriftSpec& spec, const CoordinateChart& chart, const Grid& grid,
                                           std::int64_t layer, const std::vector<double>* occupancy = nullptr,
                                           int jobs = 1);

struct DeltaStart {
  Slice slice;
  Eigen::VectorXd position;  // lattice image actually used
};

// Unit mass at the lattice image nearest to x0.
DeltaStart delta_slice(const CoordinateChart& chart, const Eigen::VectorXd& x0, std::int64_t layer = 0);
// Gaussian density sampled at lattice images inside `window`, normalized to unit mass.
Slice gaussian_distribution(const CoordinateChart& chart, const Eigen::VectorXd& mean, const Eigen::VectorXd& sd,
                            const PhysicalBox& window, std::int64_t layer = 0);
// Observable sampled on the domain of dependence of `window` after `steps`
// observable steps; the final slice sits on layer 0.
Slice observable_slice(const CoordinateChart& chart, const std::function<double(const Eigen::VectorXd&)>& f,
                       const PhysicalBox& window, std::size_t steps);
// Drop all-zero margins of the grid (keeps one site if everything is zero).
Slice trim_to_support(const Slice& s);

struct MomentRow {
  double t = 0.0;
  double mass = 0.0;
  std::vector<double> mean;  // N entries
  std::vector<double> cov;   // upper triangle, row-major
  double min = 0.0, max = 0.0;
};

/**
 * Values are read as weights on the physical positions of the valid region:
 * for distributions these are the usual moments, for observables they
 * summarize the weight profile of f.
 */
MomentRow slice_moments(const Slice& s, const SliceGeometry& geom);

struct MomentReport {
  std::size_t N = 0;
  std::vector<MomentRow> rows;
  Slice final_slice;

  std::vector<std::string> header() const;
  std::string csv() const;
};

enum class EvolutionMode { observable, distribution };

struct RunOptions {
  EvolutionMode mode = EvolutionMode::distribution;
  std::size_t steps = 0;
  int jobs = 1;
  double flush_threshold = 0.0;
  // Distribution mode: mass leaving this box raises BoundaryReached.
  std::optional<PhysicalBox> window;
};

MomentReport run_scenario(Slice initial, const DriftSpec& spec, const CoordinateChart& chart, const RunOptions& opt);
// Same probabilities p at every site.
MomentReport run_scenario(Slice initial, const std::vector<double>& p, const CoordinateChart& chart,
                          const RunOptions& opt);

/** dm = M m + c, dC = M C + C Mᵀ + D. */
struct LinearMomentSystem {
  Eigen::MatrixXd M;
  Eigen::VectorXd c;
  Eigen::MatrixXd D;
};

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Classical RK4 with a fixed number of substeps.
GaussianMoments integrate_moments(const LinearMomentSystem& sys, const GaussianMoments& init, double T,
                                  std::size_t substeps = 20000);

enum class AnalyticSolution { heat_kernel, smoluchowski_const, ou, kramers_moments };
AnalyticSolution parse_analytic(const std::string& name);
std::string to_string(AnalyticSolution a);

struct ConvergeSetup {
  double T = 1.0;
  Eigen::VectorXd x0;    // start for the moment cases
  double s0 = 0.5;       // width of the Gaussian observable
  double window = 2.0;   // half-width of the compared region (observable cases)
  double flush_threshold = 0.0;
  // Continuum diffusion matrix for the moment oracle; defaults to the family limit.
  std::optional<Eigen::MatrixXd> diffusion;
  int jobs = 1;
};

struct ConvergenceRow {
  double eps = 0.0;
  std::size_t steps = 0;
  double error = 0.0;
  std::optional<double> order;
};

struct ConvergenceTable {
  std::string analytic;
  std::vector<ConvergenceRow> rows;
  bool monotone = true;  // errors strictly decreasing along the grid

  std::string csv() const;
};

// Number of steps b·n = T; throws ConfigError unless T/b is an integer (1e-9 relative).
std::size_t steps_for_horizon(double T, double b);

ConvergenceTable converge(const ScalingFamily& family, const DriftSpec& spec, AnalyticSolution analytic,
                          const std::vector<double>& eps_grid, const ConvergeSetup& setup);

std::string format_double(double v);  // 17 significant digits

}  // namespace latkin
