#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "latkin/dynamics.hpp"
#include "latkin/errors.hpp"
#include "latkin/evolve.hpp"
#include "latkin/graph_calculus.hpp"
#include "latkin/identity_suite.hpp"
#include "latkin/scaling.hpp"
#include "latkin/scenario.hpp"

namespace py = pybind11;
using namespace latkin;

namespace {

// Accepts config text or a mapping of key -> value (lists become comma lists).
Config to_config(const py::object& obj) {
  if (obj.is_none()) return Config{};
  if (py::isinstance<py::str>(obj)) return Config::parse(obj.cast<std::string>());
  Config c;
  for (const auto& [k, v] : obj.cast<py::dict>()) {
    std::string value;
    if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      for (const auto& item : v) value += (value.empty() ? "" : ",") + py::str(item).cast<std::string>();
    } else {
      value = py::str(v).cast<std::string>();
    }
    c.set(py::str(k).cast<std::string>(), value);
  }
  return c;
}

py::dict moments(const MomentReport& rep) {
  py::list rows;
  for (const auto& r : rep.rows) {
    py::dict d;
    d["t"] = r.t;
    d["mass"] = r.mass;
    d["mean"] = r.mean;
    d["cov"] = r.cov;
    d["min"] = r.min;
    d["max"] = r.max;
    rows.append(d);
  }
  py::dict out;
  out["N"] = rep.N;
  out["header"] = rep.header();
  out["rows"] = rows;
  out["csv"] = rep.csv();
  return out;
}

py::dict convergence(const ConvergenceTable& t) {
  py::list rows;
  for (const auto& r : t.rows) {
    py::dict d;
    d["eps"] = r.eps;
    d["steps"] = r.steps;
    d["error"] = r.error;
    d["order"] = r.order ? py::cast(*r.order) : py::none();
    rows.append(d);
  }
  py::dict out;
  out["analytic"] = t.analytic;
  out["rows"] = rows;
  out["monotone"] = t.monotone;
  out["csv"] = t.csv();
  return out;
}

}  // namespace

PYBIND11_MODULE(_latkin, m) {
  m.doc() = "Lattice stochastic calculus core";

  static py::exception<Error> base(m, "LatkinError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  static py::exception<DimensionError> dimension_error(m, "DimensionError", base.ptr());
  static py::exception<DomainViolation> domain_violation(m, "DomainViolation", base.ptr());
  static py::exception<SingularMatrix> singular(m, "SingularMatrix", base.ptr());
  static py::exception<UnsupportedInput> unsupported(m, "UnsupportedInput", base.ptr());
  static py::exception<OffLattice> off_lattice(m, "OffLattice", base.ptr());
  static py::exception<LimitNotFound> no_limit(m, "LimitNotFound", base.ptr());
  static py::exception<BoundaryReached> boundary(m, "BoundaryReached", base.ptr());
  static py::exception<EvolutionExhausted> exhausted(m, "EvolutionExhausted", base.ptr());
  // most derived first
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(config_error.ptr(), e.what());
    } catch (const DimensionError& e) {
      PyErr_SetString(dimension_error.ptr(), e.what());
    } catch (const DomainViolation& e) {
      PyErr_SetString(domain_violation.ptr(), e.what());
    } catch (const SingularMatrix& e) {
      PyErr_SetString(singular.ptr(), e.what());
    } catch (const UnsupportedInput& e) {
      PyErr_SetString(unsupported.ptr(), e.what());
    } catch (const OffLattice& e) {
      PyErr_SetString(off_lattice.ptr(), e.what());
    } catch (const LimitNotFound& e) {
      PyErr_SetString(no_limit.ptr(), e.what());
    } catch (const BoundaryReached& e) {
      PyErr_SetString(boundary.ptr(), e.what());
    } catch (const EvolutionExhausted& e) {
      PyErr_SetString(exhausted.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), e.what());
    }
  });

  m.def(
      "identity_suite",
      [](std::uint64_t seed, std::size_t graph_instances, std::size_t max_sites, std::size_t probability_fields) {
        SuiteOptions opt;
        opt.seed = seed;
        opt.graph_instances = graph_instances;
        opt.max_sites = max_sites;
        opt.probability_fields = probability_fields;
        SuiteReport rep;
        {
          py::gil_scoped_release release;
          rep = run_identity_suite(opt);
        }
        py::list out;
        for (const auto& r : rep.results) {
          py::dict d;
          d["name"] = r.name;
          d["instances"] = r.instances;
          d["max_residual"] = r.max_residual;
          d["passed"] = r.passed;
          d["failing_instance"] = r.failing_instance;
          out.append(d);
        }
        return out;
      },
      py::arg("seed") = 1, py::arg("graph_instances") = 200, py::arg("max_sites") = 8,
      py::arg("probability_fields") = 100, "Run the algebraic identity suite; one dict per identity.");

  m.def(
      "classify_generator",
      [](std::size_t sites, const std::vector<std::tuple<std::size_t, std::size_t, double>>& coeffs) {
        GraphVectorField X;
        X.sites = sites;
        for (const auto& [i, j, c] : coeffs) X.set(i, j, c);
        const Classification c = classify_generator(X);
        py::dict d;
        d["kind"] = std::string(to_string(c.kind));
        d["site_map"] = c.site_map;
        d["inverse_map"] = c.inverse_map;
        d["failing_site"] = c.failing_site ? py::cast(*c.failing_site) : py::none();
        return d;
      },
      py::arg("sites"), py::arg("coeffs"), "Classify X = Σ c e_ij given as (i, j, c) triples.");

  m.def(
      "simulate",
      [](const py::object& config, int jobs) {
        const ScenarioConfig cfg = ScenarioConfig::from(to_config(config));
        MomentReport rep;
        {
          py::gil_scoped_release release;
          rep = simulate(cfg, jobs);
        }
        return moments(rep);
      },
      py::arg("config") = py::none(), py::arg("jobs") = 1, "Evolve a scenario; config is text or a dict.");

  m.def(
      "converge",
      [](const py::object& config, int jobs) {
        const ScenarioConfig cfg = ScenarioConfig::from(to_config(config));
        ConvergenceTable t;
        {
          py::gil_scoped_release release;
          t = converge_scenario(cfg, jobs);
        }
        return convergence(t);
      },
      py::arg("config") = py::none(), py::arg("jobs") = 1, "Error against the analytic oracle over the eps grid.");

  m.def(
      "kramers_gauge",
      [](const std::array<double, 6>& entries) {
        const KramersGauge g = kramers_gauge(entries);
        py::dict d;
        d["det"] = g.det;
        d["p_hat"] = g.p_hat;
        d["q_hat"] = g.q_hat;
        d["r_hat"] = g.r_hat;
        d["eta11"] = g.eta11;
        d["eta12"] = g.eta12;
        d["eta22"] = g.eta22;
        return d;
      },
      py::arg("entries"), "Limit quantities of the chart (κ, λ, μ, κ′, λ′, μ′); η entries in units of h_ij.");

  m.def("kramers_gauge_solve", [] {
    py::list out;
    for (const auto& f : kramers_gauge_solve()) {
      py::dict d;
      d["name"] = f.name;
      d["conditions"] = f.conditions;
      d["free_parameters"] = f.free_parameters;
      d["constraint"] = f.constraint;
      d["eta22"] = f.eta22;
      d["residual_gauge_dimension"] = f.residual_gauge_dimension;
      out.append(d);
    }
    return out;
  });

  m.def(
      "scaling_diagnose",
      [](const py::object& config) {
        const ScalingDiagnosis d = scaling_diagnose(to_config(config));
        py::list rows;
        for (const auto& r : d.rows) {
          py::dict row;
          row["family"] = r.name;
          row["status"] = to_string(r.status);
          row["limit_exists"] = r.limit_exists;
          row["psd"] = r.psd;
          row["highest_order"] = r.highest_order;
          row["notes"] = r.notes;
          rows.append(row);
        }
        py::list theta;
        for (const auto& t : d.theta) {
          py::dict row;
          row["name"] = t.name;
          row["theta2_bounded"] = t.theta2_bounded;
          row["theta3_vanishing"] = t.theta3_vanishing;
          row["b_hat_nonnegative"] = t.b_hat_nonnegative;
          row["diagnostic"] = t.diagnostic;
          theta.append(row);
        }
        py::dict out;
        out["rows"] = rows;
        out["theta"] = theta;
        out["csv"] = report_csv(d.rows);
        out["summary"] = d.summary();
        return out;
      },
      py::arg("config") = py::none());
}
