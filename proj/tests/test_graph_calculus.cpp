#include <doctest.h>

#include <random>

#include "latkin/errors.hpp"
#include "latkin/graph_calculus.hpp"
#include "latkin/identity_suite.hpp"
#include "support.hpp"

using namespace latkin;

TEST_CASE("exterior derivative is the edge difference") {
  const EdgeSet es(3, {{0, 1}, {2, 0}});
  const ScalarField f({1.0, 4.0, -2.0});
  const OneForm df = exterior_derivative(f, es);
  CHECK(df.at(0, 1) == 3.0);
  CHECK(df.at(2, 0) == 3.0);
  CHECK(df.at(1, 2) == 0.0);
  CHECK(df.coeffs.size() == 2);
}

TEST_CASE("bimodule actions pick the source and target values") {
  const ScalarField f({2.0, 5.0});
  const OneForm e = basis_form(2, 0, 1);
  CHECK(left_multiply(f, e).at(0, 1) == 2.0);
  CHECK(right_multiply(e, f).at(0, 1) == 5.0);
}

TEST_CASE("Leibniz defect matches a hand computation") {
  const EdgeSet es = EdgeSet::universal(2);
  const ScalarField f({1.0, 3.0}), g({2.0, -1.0});
  // d(fg)(0,1) = −3 − 2 = −5, f·dg = 1·(−3), g·df = 2·2 → defect = −5 + 3 − 4 = −6 = df·dg = 2·(−3)
  const OneForm L = leibniz_defect(f, g, es);
  CHECK(L.at(0, 1) == doctest::Approx(-6.0));
  CHECK(bullet(exterior_derivative(f, es), exterior_derivative(g, es)).at(0, 1) == doctest::Approx(-6.0));
}

TEST_CASE("vector field action is the pairing with df") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  const EdgeSet es = EdgeSet::universal(5);
  GraphVectorField X;
  X.sites = 5;
  for (const auto& e : es.edges()) X.set(e.first, e.second, U(rng));
  std::vector<double> v(5);
  for (auto& x : v) x = U(rng);
  const ScalarField f(v);
  const ScalarField a = apply_vector_field(X, f), b = pair(exterior_derivative(f, es), X);
  for (std::size_t i = 0; i < 5; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
}

TEST_CASE("generator classification is exhaustive-correct on 3 and 4 sites") {
  for (std::size_t n : {3u, 4u}) {
    std::size_t flows = 0, endos = 0;
    for (const auto& X : support::all_binary_fields(n)) {
      const GeneratorClass expected = support::expected_class(X);
      const bool bijective = expected == GeneratorClass::flow;
      const bool endo = expected != GeneratorClass::general;
      const Classification c = classify_generator(X);
      REQUIRE(c.kind == expected);
      CHECK(brute_force_class(X) == expected);
      flows += bijective;
      endos += endo;
      if (c.kind != GeneratorClass::general) {
        // φ(f)(i) = f(Φ(i)) on a generic f
        std::vector<double> fv(n);
        for (std::size_t i = 0; i < n; ++i) fv[i] = 1.0 + 10.0 * static_cast<double>(i);
        const ScalarField img = make_endomorphism(X).apply(ScalarField(fv));
        for (std::size_t i = 0; i < n; ++i) CHECK(img[i] == fv[c.site_map[i]]);
      }
    }
    // n^n site maps are endomorphisms, n! of them bijective; {0,1} fields reach every one.
    const std::size_t nn = n == 3 ? 27 : 256, fact = n == 3 ? 6 : 24;
    CHECK(endos == nn);
    CHECK(flows == fact);
  }
}

TEST_CASE("flow inverse map undoes the site map") {
  GraphVectorField X;
  X.sites = 3;
  X.set(0, 1, 1.0);
  X.set(1, 2, 1.0);
  X.set(2, 0, 1.0);
  const Classification c = classify_generator(X);
  REQUIRE(c.kind == GeneratorClass::flow);
  for (std::size_t i = 0; i < 3; ++i) CHECK(c.inverse_map[c.site_map[i]] == i);
}

TEST_CASE("non-idempotent coefficients are general and report the failing site") {
  GraphVectorField X;
  X.sites = 2;
  X.set(1, 0, 0.5);
  const Classification c = classify_generator(X);
  CHECK(c.kind == GeneratorClass::general);
  REQUIRE(c.failing_site.has_value());
  CHECK(*c.failing_site == 1);
}

TEST_CASE("identity suite passes and catches a broken product") {
  SuiteOptions opt;
  opt.graph_instances = 120;
  opt.probability_fields = 40;
  CHECK(run_identity_suite(opt).all_passed());

  opt.bullet = [](const OneForm& a, const OneForm& b) {
    OneForm w = bullet(a, b);
    for (auto& [e, v] : w.coeffs) v *= 1.5;
    return w;
  };
  const SuiteReport rep = run_identity_suite(opt);
  CHECK_FALSE(rep.all_passed());
  CHECK_FALSE(rep.results.front().passed);
  CHECK(rep.text().find("FAIL Leibniz defect") != std::string::npos);
  CHECK(rep.results.front().failing_instance.find("\"edges\"") != std::string::npos);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(EdgeSet(2, {{0, 0}}), Error);
  CHECK_THROWS_AS(EdgeSet(2, {{0, 2}}), Error);
  const EdgeSet es = EdgeSet::universal(2);
  CHECK_THROWS_AS(exterior_derivative(ScalarField({1.0, 2.0, 3.0}), es), DimensionError);
  GraphVectorField big;
  big.sites = 10;
  CHECK_THROWS_AS(make_endomorphism(big, 4), UnsupportedInput);
  SuiteOptions opt;
  opt.graph_instances = 0;
  CHECK_THROWS_AS(run_identity_suite(opt), ConfigError);
}
