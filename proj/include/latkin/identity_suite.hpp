#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "latkin/graph_calculus.hpp"

namespace latkin {

struct IdentityResult {
  std::string name;
  std::size_t instances = 0;
  double max_residual = 0.0;
  bool passed = true;
  std::string failing_instance;  // JSON, for replay
};

struct SuiteOptions {
  std::uint64_t seed = 1;
  std::size_t graph_instances = 200;  // random digraphs
  std::size_t max_sites = 8;
  std::size_t probability_fields = 100;
  std::size_t max_spatial_dim = 4;
  double tolerance = 1e-12;
  // Product used where the suite forms df • dg; tests swap in a broken one.
  std::function<OneForm(const OneForm&, const OneForm&)> bullet = [](const OneForm& a, const OneForm& b) {
    return latkin::bullet(a, b);
  };
};

struct SuiteReport {
  std::vector<IdentityResult> results;
  bool all_passed() const;
  std::string text() const;
};

SuiteReport run_identity_suite(const SuiteOptions& opt);

/** Brute-force classification: φ = I + X checked on products of basis functions, then for being a permutation. */
GeneratorClass brute_force_class(const GraphVectorField& X, double tol = 1e-12);

}  // namespace latkin
