#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "mfginv/cli/config.hpp"
#include "mfginv/cli/experiment.hpp"
#include "mfginv/errors.hpp"
#include "mfginv/forward.hpp"
#include "mfginv/hopfcole.hpp"
#include "mfginv/inverse.hpp"

namespace py = pybind11;
using namespace mfginv;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

/// A config-built problem together with its settings, so Python callers get
/// the same defaults as the command-line tool.
struct PyProblem {
  cli::ExperimentConfig cfg;
  MfgProblem problem;
};

PyProblem make_problem(const std::string& json_text) {
  cli::ExperimentConfig cfg = cli::parse_config(nlohmann::json::parse(json_text));
  MfgProblem p = cli::build_problem(cfg);
  return {std::move(cfg), std::move(p)};
}

Array to_numpy(const SpatialField& f) {
  Array out(f.size());
  std::copy(f.vec().begin(), f.vec().end(), out.mutable_data());
  return out;
}

Array to_numpy(const SpaceTimeField& f) {
  Array out({f.levels(), f.grid().nx()});
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

SpatialField spatial(const Grid& g, const Array& a) {
  if (a.ndim() != 1 || a.shape(0) != g.nx())
    throw InvalidArgument("expected a 1-d array of length " + std::to_string(g.nx()));
  return SpatialField(g, std::vector<double>(a.data(), a.data() + a.size()));
}

SpaceTimeField spacetime(const Grid& g, const Array& a) {
  if (a.ndim() != 2 || a.shape(0) != g.nt() + 1 || a.shape(1) != g.nx())
    throw InvalidArgument("expected an array of shape (" + std::to_string(g.nt() + 1) + ", " +
                          std::to_string(g.nx()) + ")");
  return SpaceTimeField(g, std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict forward_dict(const ForwardResult& r) {
  py::dict d;
  d["rho"] = to_numpy(r.rho);
  d["phi"] = to_numpy(r.phi);
  d["converged"] = r.converged();
  d["iterations"] = r.iterations;
  d["residual_history"] = r.residual_history;
  return d;
}

py::dict inverse_dict(const InverseResult& r) {
  py::dict d;
  d["q"] = to_numpy(r.q);
  d["rho"] = to_numpy(r.rho);
  d["phi"] = to_numpy(r.phi);
  d["status"] = to_string(r.status);
  d["converged"] = r.converged();
  d["iterations"] = r.iterations;
  d["hjb_fp_solves"] = r.hjb_fp_solves();
  d["meas_rel_err"] = r.meas_rel_err();
  d["q_rel_err"] = r.q_rel_err ? py::cast(*r.q_rel_err) : py::none();
  py::list hist;
  for (const IterationRecord& h : r.history) {
    py::dict row;
    row["k"] = h.k;
    row["meas_rel_err"] = h.meas_rel_err;
    row["q_rel_err"] = h.q_rel_err ? py::cast(*h.q_rel_err) : py::none();
    row["forward_residual"] = h.forward_residual;
    row["hjb_fp_solves_cum"] = h.hjb_fp_solves_cum;
    row["level"] = h.level;
    row["fine_equiv_solves"] = h.fine_equiv_solves;
    hist.append(row);
  }
  d["history"] = hist;
  return d;
}

py::dict outcome_dict(const cli::RunOutcome& o) {
  py::dict d;
  d["name"] = o.name;
  d["mode"] = o.mode;
  d["exit_code"] = o.exit_code;
  d["status"] = o.status;
  d["message"] = o.message;
  d["converged"] = o.converged;
  d["outer_iters"] = o.outer_iters;
  d["hjb_fp_solves"] = o.hjb_fp_solves;
  d["meas_rel_err"] = o.meas_rel_err ? py::cast(*o.meas_rel_err) : py::none();
  d["q_rel_err"] = o.q_rel_err ? py::cast(*o.q_rel_err) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Forward and inverse solvers for one-dimensional periodic mean-field games";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<PyProblem>(m, "Problem")
      .def_static("from_json", &make_problem, py::arg("config_json"))
      .def_property_readonly("nx", [](const PyProblem& p) { return p.problem.grid().nx(); })
      .def_property_readonly("nt", [](const PyProblem& p) { return p.problem.grid().nt(); })
      .def_property_readonly("T", [](const PyProblem& p) { return p.problem.grid().T(); })
      .def_property_readonly("nu", [](const PyProblem& p) { return p.problem.nu(); })
      .def_property_readonly("x",
                             [](const PyProblem& p) {
                               const Grid& g = p.problem.grid();
                               return to_numpy(SpatialField::sample(g, [](double x) { return x; }));
                             })
      .def_property_readonly("rho0", [](const PyProblem& p) { return to_numpy(p.problem.rho0()); })
      .def_property_readonly("q_true", [](const PyProblem& p) -> py::object {
        return p.problem.q() ? py::object(to_numpy(*p.problem.q())) : py::none();
      });

  m.def(
      "solve_forward",
      [](const PyProblem& p, const Array& q, std::optional<double> delta, std::optional<double> tol,
         std::optional<int> max_iter) {
        FicPlayParams params = p.cfg.forward;
        if (delta) params.schedule = WeightSchedule::fixed(*delta);
        if (tol) params.tol = *tol;
        if (max_iter) params.max_iter = *max_iter;
        ForwardResult r;
        {
          py::gil_scoped_release release;
          r = fictitious_play(p.problem, spatial(p.problem.grid(), q), std::nullopt, params);
        }
        return forward_dict(r);
      },
      py::arg("problem"), py::arg("q"), py::arg("delta") = py::none(), py::arg("tol") = py::none(),
      py::arg("max_iter") = py::none(), "Fictitious play for the given potential.");

  m.def(
      "generate_measurement",
      [](const PyProblem& p) {
        if (!p.problem.q()) throw InvalidArgument("the problem has no true potential");
        ForwardResult r;
        {
          py::gil_scoped_release release;
          r = fictitious_play(p.problem, *p.problem.q(), std::nullopt, p.cfg.measurement.forward);
        }
        if (!r.converged()) throw SolverFailure("truth forward solve did not converge");
        return to_numpy(r.phi.slice(0));
      },
      py::arg("problem"), "Value function at t = 0 of the true equilibrium.");

  m.def(
      "invert",
      [](const PyProblem& p, const Array& phi0, const std::string& method, std::optional<Array> q0,
         std::optional<double> outer_tol, std::optional<int> outer_max) {
        const Grid& g = p.problem.grid();
        InverseConfig cfg = p.cfg.inverse;
        cfg.forward = p.cfg.forward;
        cfg.q0 = q0 ? spatial(g, *q0) : cli::resolve_field(p.cfg.q0_spec, p.problem, p.cfg.seed);
        if (outer_tol) cfg.outer_tol = *outer_tol;
        if (outer_max) cfg.outer_max = *outer_max;
        const Measurement meas(spatial(g, phi0));
        InverseResult r;
        {
          py::gil_scoped_release release;
          if (method == "eci") r = run_eci(p.problem, meas, cfg);
          else if (method == "bri") r = run_bri(p.problem, meas, cfg);
          else if (method == "bri-static-restart") r = run_bri_static_restart(p.problem, meas, cfg);
          else if (method == "heci") r = run_heci(p.problem, meas, cfg);
          else if (method == "linpara") r = run_linpara_inversion(p.problem, meas, cfg);
          else throw InvalidArgument("unknown method '" + method + "'");
        }
        return inverse_dict(r);
      },
      py::arg("problem"), py::arg("phi0"), py::arg("method") = "eci", py::arg("q0") = py::none(),
      py::arg("outer_tol") = py::none(), py::arg("outer_max") = py::none(),
      "Recover the potential from a t = 0 value function measurement.");

  m.def(
      "measurement_term",
      [](const PyProblem& p, const Array& phi0) {
        return to_numpy(measurement_term(spatial(p.problem.grid(), phi0), p.problem));
      },
      py::arg("problem"), py::arg("phi0"));

  m.def(
      "eci_update",
      [](const PyProblem& p, const Array& q_k, const Array& phi0_k, const Array& phi0_meas) {
        const Grid& g = p.problem.grid();
        return to_numpy(eci_update(spatial(g, q_k), spatial(g, phi0_k), Measurement(spatial(g, phi0_meas)), p.problem));
      },
      py::arg("problem"), py::arg("q_k"), py::arg("phi0_k"), py::arg("phi0_meas"));

  m.def(
      "to_hopf_cole",
      [](const PyProblem& p, const Array& rho, const Array& phi) {
        const Grid& g = p.problem.grid();
        const HopfColePair hc = to_hopf_cole(spacetime(g, rho), spacetime(g, phi), p.problem.nu());
        return py::make_tuple(to_numpy(hc.w), to_numpy(hc.u));
      },
      py::arg("problem"), py::arg("rho"), py::arg("phi"), "Returns (w, u).");

  m.def(
      "from_hopf_cole",
      [](const PyProblem& p, const Array& w, const Array& u) {
        const Grid& g = p.problem.grid();
        const DensityValue dv = from_hopf_cole({spacetime(g, w), spacetime(g, u)}, p.problem.nu());
        return py::make_tuple(to_numpy(dv.rho), to_numpy(dv.phi));
      },
      py::arg("problem"), py::arg("w"), py::arg("u"), "Returns (rho, phi).");

  m.def(
      "run_config",
      [](const std::string& path, std::optional<std::string> mode, std::optional<std::string> out) {
        cli::ExperimentConfig cfg = cli::load_config(path, mode);
        if (out) cfg.output_dir = *out;
        cli::RunOutcome o;
        {
          py::gil_scoped_release release;
          o = cli::run_experiment(cfg);
        }
        return outcome_dict(o);
      },
      py::arg("path"), py::arg("mode") = py::none(), py::arg("out") = py::none(),
      "Run one config file as the command-line tool does.");
}
