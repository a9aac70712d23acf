#include <doctest.h>

#include "latkin/errors.hpp"
#include "latkin/scenario.hpp"

using namespace latkin;

namespace {

ScenarioConfig parse(const std::string& text) { return ScenarioConfig::from(Config::parse(text)); }

}  // namespace

TEST_CASE("config parsing: comments, lists, overrides") {
  Config c = Config::parse("# heading\nscenario = ou  # trailing\n\neps_grid = 0.1, 0.05\n");
  CHECK(c.text("scenario", "") == "ou");
  CHECK(c.numbers("eps_grid", {}) == std::vector<double>{0.1, 0.05});
  c.set("scenario=diffusion1d");
  CHECK(c.text("scenario", "") == "diffusion1d");
  CHECK_THROWS_AS(Config::parse("no equals sign"), ConfigError);
  CHECK_THROWS_AS(c.set("novalue"), ConfigError);
  CHECK_THROWS_AS(Config::parse("eps = abc").number("eps", 0), ConfigError);
  CHECK_THROWS_AS(Config::load("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("scenario validation") {
  CHECK_THROWS_AS(parse("colour = blue"), ConfigError);
  CHECK_THROWS_AS(parse("schema_version = 2"), ConfigError);
  CHECK_THROWS_AS(parse("scenario = quantum"), ConfigError);
  CHECK_THROWS_AS(parse("eps = -1"), ConfigError);
  CHECK_THROWS_AS(parse("scenario = kramers\nx0 = 1,2,3"), ConfigError);
  CHECK_THROWS_AS(parse("scenario = custom\nchart_A = 1,1,1"), ConfigError);
  CHECK_NOTHROW(parse("schema_version = 1"));
  const ScenarioConfig k = parse("scenario = kramers");
  CHECK(k.N() == 2);
  CHECK(k.eps_grid == std::vector<double>{0.02, 0.01, 0.005});
}

TEST_CASE("diffusion1d: variance equals t to 1e-12") {
  const ScenarioConfig s = parse("scenario = diffusion1d\nh = 1\nT = 1\neps = 0.05");
  const MomentReport rep = simulate(s, 1);
  CHECK(rep.rows.size() == 401);
  for (const auto& r : rep.rows) CHECK(std::abs(r.cov[0] - r.t) <= 1e-12 * std::max(r.t, 1e-300));
}

TEST_CASE("OU window beyond a/(2 beta b) is a domain violation before stepping") {
  const ScenarioConfig s = parse("scenario = ou\neps = 0.05\nbeta = 1\nwindow = 30");
  // a/(2βb) = 0.05/(2·0.0025) = 10
  try {
    simulate(s, 1);
    FAIL("expected a domain violation");
  } catch (const DomainViolation& e) {
    CHECK(std::string(e.what()).find("|x| <= 10") != std::string::npos);
  }
  CHECK_NOTHROW(simulate(parse("scenario = ou\neps = 0.05\nwindow = 9\nT = 0.1"), 1));
}

TEST_CASE("observable mode needs a window and runs with one") {
  CHECK_THROWS_AS(simulate(parse("mode = observable\nT = 0.01"), 1), ConfigError);
  const MomentReport rep = simulate(parse("mode = observable\nT = 0.05\nwindow = 1\nobservable = x2"), 1);
  CHECK(rep.rows.size() == 21);
}

TEST_CASE("custom uniform probabilities drive the walk") {
  const ScenarioConfig s = parse("scenario = custom\nchart_A = 1,1,1,-1\np = 1,0\nsteps = 5\neps = 0.1");
  const MomentReport rep = simulate(s, 1);
  // deterministic step along direction 0: x moves by +a each step, velocity a/b
  CHECK(rep.rows.back().mean[0] == doctest::Approx(0.5));
  CHECK(rep.rows.back().cov[0] == doctest::Approx(0.0));
}

TEST_CASE("converge from configs") {
  const ConvergenceTable heat = converge_scenario(parse("scenario = diffusion1d"), 2);
  CHECK(*heat.rows.back().order >= 1.9);
  const ConvergenceTable single = converge_scenario(parse("eps_grid = 0.05"), 1);
  CHECK(single.rows.size() == 1);
  CHECK_FALSE(single.rows[0].order);
  CHECK_THROWS_AS(converge_scenario(parse("scenario = randomwalk_nd"), 1), ConfigError);
}

TEST_CASE("scaling diagnosis from configs") {
  const ScalingDiagnosis d = scaling_diagnose(Config{});
  REQUIRE_FALSE(d.rows.empty());
  CHECK(d.rows.front().name == "sqrt_two_group");
  CHECK(d.rows.front().status == VerdictStatus::ok);
  Config cubic;
  cubic.set("partition=cubic");
  const ScalingDiagnosis c = scaling_diagnose(cubic);
  for (const auto& r : c.rows) {
    CHECK(r.status == VerdictStatus::requires_constraint);
    CHECK(report_csv({r}).find("C^{ij}_a") != std::string::npos);
  }
  Config bad;
  bad.set("partition=quartic");
  CHECK_THROWS_AS(scaling_diagnose(bad), ConfigError);
  CHECK(d.summary().find("theta2 bounded and theta3 -> 0") != std::string::npos);
}
