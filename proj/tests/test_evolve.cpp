#include <doctest.h>

#include <cmath>
#include <random>

#include "latkin/errors.hpp"
#include "latkin/evolve.hpp"
#include "support.hpp"

using namespace latkin;

namespace {

double binomial(int n, int k) { return std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1)); }

}  // namespace

TEST_CASE("symmetric walk from a delta is binomial") {
  const double a = 0.1, b = 0.01;
  const CoordinateChart chart = make_lightcone_chart_1d(a, b);
  const SliceGeometry geom(chart);
  const int n = 20;
  const Slice s = support::evolve_distribution(delta_slice(chart, Eigen::VectorXd::Zero(1)).slice, DriftSpec::free(1), chart, n);
  double total = 0;
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    const double x = geom.position(s.layer, s.grid.coords(k))(0);
    const int right = static_cast<int>(std::lround((x / a + n) / 2));
    CHECK(s.values[k] == doctest::Approx(binomial(n, right) / std::pow(2.0, n)).epsilon(1e-13));
    total += s.values[k];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("variance grows as h t exactly; f = x^2 gains a^2 per step") {
  const double h = 1.3, eps = 0.05;
  const ScalingFamily fam = standard_family("heat", lightcone_matrix(), Eigen::VectorXd::Constant(1, h));
  const CoordinateChart chart = fam.chart_at(eps);
  RunOptions opt;
  opt.steps = 400;
  const MomentReport rep = run_scenario(delta_slice(chart, Eigen::VectorXd::Zero(1)).slice, DriftSpec::free(1), chart, opt);
  for (const auto& r : rep.rows) {
    if (r.t == 0) continue;
    CHECK(std::abs(r.cov[0] - h * r.t) <= 1e-12 * h * r.t);
    CHECK(std::abs(r.mass - 1.0) < 1e-13);
  }

  const double a = chart.a()(0);
  PhysicalBox win{Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)};
  Slice f = observable_slice(chart, [](const Eigen::VectorXd& x) { return x(0) * x(0); }, win, 10);
  const SliceGeometry geom(chart);
  for (int step = 1; step <= 10; ++step) {
    f = support::evolve_observable(f, DriftSpec::free(1), chart, 1);
    for (std::size_t k = 0; k < f.grid.size(); ++k) {
      const double x = geom.position(f.layer, f.grid.coords(k))(0);
      CHECK(f.values[k] == doctest::Approx(x * x + step * a * a).epsilon(1e-13));
    }
  }
}

TEST_CASE("constant force: mean drifts by -2 gamma h per unit time exactly") {
  const double gamma = 0.4, h = 1.0;
  const ScalingFamily fam = standard_family("s", lightcone_matrix(), Eigen::VectorXd::Constant(1, h));
  const CoordinateChart chart = fam.chart_at(0.05);
  RunOptions opt;
  opt.steps = 200;
  const MomentReport rep =
      run_scenario(delta_slice(chart, Eigen::VectorXd::Zero(1)).slice, DriftSpec::constant_force(gamma, h), chart, opt);
  for (const auto& r : rep.rows) CHECK(r.mean[0] == doctest::Approx(-2 * gamma * h * r.t).epsilon(1e-12));
}

TEST_CASE("OU: mean contracts by (1 - 2 beta b) per step") {
  const double beta = 1.0;
  const ScalingFamily fam = standard_family("ou", lightcone_matrix(), Eigen::VectorXd::Constant(1, 1.0));
  const CoordinateChart chart = fam.chart_at(0.05);
  RunOptions opt;
  opt.steps = 300;
  const DeltaStart d = delta_slice(chart, Eigen::VectorXd::Constant(1, 1.0));
  const MomentReport rep = run_scenario(d.slice, DriftSpec::ornstein_uhlenbeck(beta), chart, opt);
  const double f = 1 - 2 * beta * chart.b();
  for (std::size_t k = 1; k < rep.rows.size(); ++k)
    CHECK(rep.rows[k].mean[0] == doctest::Approx(f * rep.rows[k - 1].mean[0]).epsilon(1e-12));
}

TEST_CASE("observable and distribution steps are adjoint") {
  const CoordinateChart chart = make_simplex_chart(Eigen::Vector2d(0.1, 0.1), 0.01);
  const DriftSpec R = DriftSpec::ornstein_uhlenbeck(0.5, 2);
  const std::size_t n = 6;
  PhysicalBox win{Eigen::VectorXd::Constant(2, -0.4), Eigen::VectorXd::Constant(2, 0.4)};
  auto f = [](const Eigen::VectorXd& x) { return std::cos(3 * x(0)) + x(1) * x(0); };
  // σ_0 on layer 0; after n distribution steps σ_n sits on layer n, where observable_slice starts.
  const Slice sigma0 = gaussian_distribution(chart, Eigen::Vector2d(0.05, -0.02), Eigen::Vector2d(0.1, 0.1), win);
  const Slice sigma_n = support::evolve_distribution(sigma0, R, chart, n);
  const Slice fn = observable_slice(chart, f, win, n);
  const Slice f0 = support::evolve_observable(fn, R, chart, n);
  auto pair = [&](const Slice& s, const Slice& g) {
    double acc = 0;
    for (std::size_t k = 0; k < s.grid.size(); ++k) {
      if (s.values[k] == 0.0) continue;
      const Coord v = s.grid.coords(k);
      REQUIRE(g.grid.contains(v));
      acc += s.values[k] * g.values[g.grid.index(v)];
    }
    return acc;
  };
  // ⟨σ_n, f⟩ = ⟨σ_0, Tⁿ f⟩, the window being the domain of dependence
  CHECK(pair(sigma_n, fn) == doctest::Approx(pair(sigma0, f0)).epsilon(1e-13));
}

TEST_CASE("observable evolution obeys the maximum principle") {
  const CoordinateChart chart = make_lightcone_chart_1d(0.1, 0.01);
  PhysicalBox win{Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)};
  Slice f = observable_slice(chart, [](const Eigen::VectorXd& x) { return std::sin(7 * x(0)); }, win, 30);
  double lo = *std::min_element(f.values.begin(), f.values.end());
  double hi = *std::max_element(f.values.begin(), f.values.end());
  for (int k = 0; k < 30; ++k) {
    f = support::evolve_observable(f, DriftSpec::ornstein_uhlenbeck(1.0), chart, 1);
    const double l2 = *std::min_element(f.values.begin(), f.values.end());
    const double h2 = *std::max_element(f.values.begin(), f.values.end());
    CHECK(l2 >= lo - 1e-15);
    CHECK(h2 <= hi + 1e-15);
    lo = l2;
    hi = h2;
  }
}

TEST_CASE("parallel stepping is bit-identical") {
  const CoordinateChart chart = make_simplex_chart(Eigen::Vector2d(0.05, 0.05), 0.0025);
  RunOptions opt;
  opt.steps = 120;
  opt.flush_threshold = 1e-30;
  const Slice start = delta_slice(chart, Eigen::VectorXd::Zero(2)).slice;
  // observable slices are large enough for several worker chunks
  PhysicalBox win{Eigen::VectorXd::Constant(2, -1.0), Eigen::VectorXd::Constant(2, 1.0)};
  RunOptions obs = opt;
  obs.mode = EvolutionMode::observable;
  const Slice f = observable_slice(chart, [](const Eigen::VectorXd& x) { return std::exp(-x.squaredNorm()); }, win, 40);
  obs.steps = 40;
  const DriftSpec R = DriftSpec::ornstein_uhlenbeck(1.0, 2);
  for (int jobs : {2, 3, 8}) {
    RunOptions o1 = opt, oj = opt;
    oj.jobs = jobs;
    CHECK(run_scenario(start, R, chart, o1).csv() == run_scenario(start, R, chart, oj).csv());
    RunOptions b1 = obs, bj = obs;
    bj.jobs = jobs;
    CHECK(run_scenario(f, R, chart, b1).final_slice.values == run_scenario(f, R, chart, bj).final_slice.values);
  }
}

TEST_CASE("zero steps give the initial row only") {
  const CoordinateChart chart = make_lightcone_chart_1d(0.1, 0.01);
  RunOptions opt;
  const MomentReport rep = run_scenario(delta_slice(chart, Eigen::VectorXd::Zero(1)).slice, DriftSpec::free(1), chart, opt);
  CHECK(rep.rows.size() == 1);
  CHECK(rep.csv() == "t,mass,mean_x1,cov_1_1,min,max\n0,1,0,0,1,1\n");
}

TEST_CASE("error paths") {
  const CoordinateChart chart = make_lightcone_chart_1d(0.1, 0.01);
  RunOptions opt;
  opt.steps = 50;
  opt.window = PhysicalBox{Eigen::VectorXd::Constant(1, -0.3), Eigen::VectorXd::Constant(1, 0.3)};
  try {
    run_scenario(delta_slice(chart, Eigen::VectorXd::Zero(1)).slice, DriftSpec::free(1), chart, opt);
    FAIL("expected boundary");
  } catch (const BoundaryReached& e) {
    CHECK(e.step() == 4);
  }

  PhysicalBox win{Eigen::VectorXd::Constant(1, -0.2), Eigen::VectorXd::Constant(1, 0.2)};
  RunOptions obs;
  obs.mode = EvolutionMode::observable;
  obs.steps = 10;
  Slice f = observable_slice(chart, [](const Eigen::VectorXd&) { return 1.0; }, win, 2);
  CHECK_THROWS_AS(run_scenario(f, DriftSpec::free(1), chart, obs), EvolutionExhausted);

  // OU at a = 0.1, b = 0.01, β = 10: admissible only for |x| <= 0.5
  RunOptions ou;
  ou.steps = 3;
  const DeltaStart d = delta_slice(chart, Eigen::VectorXd::Constant(1, 0.8));
  try {
    run_scenario(d.slice, DriftSpec::ornstein_uhlenbeck(10.0), chart, ou);
    FAIL("expected domain violation");
  } catch (const DomainViolation& e) {
    CHECK(std::string(e.what()).find("step 1") == 0);
  }
  CHECK_THROWS_AS(steps_for_horizon(1.0, 0.3), ConfigError);
  CHECK(steps_for_horizon(1.0, 0.0025) == 400);
}

TEST_CASE("moment ODE matches closed-form OU") {
  LinearMomentSystem sys{Eigen::MatrixXd::Constant(1, 1, -2.0), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 1.0)};
  GaussianMoments init{Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Zero(1, 1)};
  const GaussianMoments m = integrate_moments(sys, init, 1.0);
  CHECK(m.mean(0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(m.cov(0, 0) == doctest::Approx(0.25 * (1 - std::exp(-4.0))).epsilon(1e-12));
}

TEST_CASE("heat-kernel convergence reaches second order") {
  const ScalingFamily fam = standard_family("heat", lightcone_matrix(), Eigen::VectorXd::Constant(1, 1.0));
  ConvergeSetup setup;
  setup.x0 = Eigen::VectorXd::Zero(1);
  const ConvergenceTable t = converge(fam, DriftSpec::free(1), AnalyticSolution::heat_kernel, {0.1, 0.05, 0.025}, setup);
  CHECK(t.monotone);
  REQUIRE(t.rows.back().order.has_value());
  CHECK(*t.rows.back().order >= 1.9);
  CHECK(t.csv().rfind("eps,error,empirical_order\n", 0) == 0);
  const ConvergenceTable single = converge(fam, DriftSpec::free(1), AnalyticSolution::heat_kernel, {0.05}, setup);
  CHECK_FALSE(single.rows[0].order.has_value());
  CHECK(single.csv().back() == '\n');
  CHECK(single.csv().find(",\n") != std::string::npos);
}
