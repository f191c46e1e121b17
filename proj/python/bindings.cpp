#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dynsmpc/config.hpp"
#include "dynsmpc/csv.hpp"
#include "dynsmpc/errors.hpp"
#include "dynsmpc/reachability.hpp"
#include "dynsmpc/safety_lp.hpp"
#include "dynsmpc/simulator.hpp"
#include "dynsmpc/synthesis.hpp"

namespace py = pybind11;
using namespace dynsmpc;

namespace {

NoiseFamily family_from(const std::string& name) {
  if (name == "gaussian") return NoiseFamily::kGaussian;
  if (name == "moment_only") return NoiseFamily::kMomentOnly;
  throw std::invalid_argument("unknown noise family: " + name);
}

py::tuple polytope_tuple(const Polytope& P) { return py::make_tuple(P.A, P.b); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stochastic MPC with dynamic chance constraints";

  static py::exception<SolveError> solve_error(m, "SolveError", PyExc_RuntimeError);
  static py::exception<InfeasibleError> infeasible_error(m, "InfeasibleError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InfeasibleError& e) {
      py::set_error(infeasible_error, e.what());
    } catch (const SolveError& e) {
      py::set_error(solve_error, e.what());
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    }
  });

  m.def("version", [] { return std::string(version_string()); });

  py::class_<ProblemInstance>(m, "ProblemInstance")
      .def(py::init<>())
      .def_property(
          "A", [](const ProblemInstance& p) { return p.system.A; },
          [](ProblemInstance& p, const Matrix& v) { p.system.A = v; })
      .def_property(
          "B", [](const ProblemInstance& p) { return p.system.B; },
          [](ProblemInstance& p, const Matrix& v) { p.system.B = v; })
      .def_property(
          "covariance", [](const ProblemInstance& p) { return p.noise.covariance; },
          [](ProblemInstance& p, const Matrix& v) { p.noise.covariance = v; })
      .def_property(
          "noise_family", [](const ProblemInstance& p) { return std::string(to_string(p.noise.family)); },
          [](ProblemInstance& p, const std::string& v) { p.noise.family = family_from(v); })
      .def_property(
          "state_set", [](const ProblemInstance& p) { return polytope_tuple(p.constraints.state_set); },
          [](ProblemInstance& p, std::pair<Matrix, Vector> v) {
            p.constraints.state_set = Polytope{v.first, v.second};
          })
      .def_property(
          "p_bar_x", [](const ProblemInstance& p) { return p.constraints.p_bar_x; },
          [](ProblemInstance& p, double v) { p.constraints.p_bar_x = v; })
      .def_readwrite("Q", &ProblemInstance::Q)
      .def_readwrite("R", &ProblemInstance::R)
      .def_readwrite("horizon", &ProblemInstance::horizon)
      .def_readwrite("x0", &ProblemInstance::x0)
      .def("validate", [](const ProblemInstance& p) {
        std::vector<std::string> out;
        for (const auto& v : validate_instance(p)) out.push_back(v.message);
        return out;
      });

  py::class_<TighteningOptions>(m, "TighteningOptions")
      .def(py::init<>())
      .def_readwrite("generators", &TighteningOptions::generators)
      .def_property(
          "scale",
          [](const TighteningOptions& o) -> std::string {
            if (!o.scale_family) return "auto";
            return *o.scale_family == NoiseFamily::kGaussian ? "chi2" : "chebyshev";
          },
          [](TighteningOptions& o, const std::string& v) {
            if (v == "auto") {
              o.scale_family.reset();
            } else if (v == "chi2") {
              o.scale_family = NoiseFamily::kGaussian;
            } else if (v == "chebyshev") {
              o.scale_family = NoiseFamily::kMomentOnly;
            } else {
              throw std::invalid_argument("scale must be auto, chi2 or chebyshev");
            }
          });

  py::class_<RunConfig>(m, "RunConfig")
      .def_readonly("instance", &RunConfig::instance)
      .def_readonly("tightening", &RunConfig::tightening)
      .def_readonly("seed", &RunConfig::seed)
      .def_readonly("hash", &RunConfig::hash);

  m.def("parse_config", &parse_config, py::arg("text"), py::arg("source") = "<config>");
  m.def("load_config", [](const std::string& path) { return load_config(path); }, py::arg("path"));
  m.def("dc_dc_converter_instance", &dc_dc_converter_instance);

  m.def(
      "solve_dare",
      [](const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
        const GainPack g = solve_dare(A, B, Q, R);
        return py::make_tuple(g.K, g.P, g.S);
      },
      "Returns (K, P, S) with u = K x.");
  m.def("solve_lyapunov", &solve_lyapunov, py::arg("AK"), py::arg("W"));
  m.def("chi2_quantile", &chi2_quantile, py::arg("p"), py::arg("d"));

  py::class_<SynthesisContext>(m, "SynthesisContext")
      .def_property_readonly("K", [](const SynthesisContext& c) { return c.gains.K; })
      .def_property_readonly("P", [](const SynthesisContext& c) { return c.gains.P; })
      .def_property_readonly("S", [](const SynthesisContext& c) { return c.gains.S; })
      .def_readonly("AK", &SynthesisContext::AK)
      .def_property_readonly("stationary_covariance",
                             [](const SynthesisContext& c) { return c.prs.stationary_covariance; })
      .def_property_readonly("p_tilde_x", [](const SynthesisContext& c) { return c.prs.p_tilde_x; })
      .def_property_readonly("zonotope_generators",
                             [](const SynthesisContext& c) { return c.zono_x.generators; })
      .def_readonly("margins_x", &SynthesisContext::margins_x)
      .def_property_readonly("tightened_state",
                             [](const SynthesisContext& c) { return polytope_tuple(c.tightened_state); })
      .def_property_readonly("terminal_set",
                             [](const SynthesisContext& c) { return polytope_tuple(c.terminal_set); });

  m.def("synthesize", &build_context, py::arg("instance"),
        py::arg("options") = TighteningOptions{});

  py::class_<TighteningSchedule>(m, "TighteningSchedule")
      .def_readonly("alpha", &TighteningSchedule::alpha)
      .def_readonly("beta", &TighteningSchedule::beta)
      .def_readonly("relaxed_px", &TighteningSchedule::relaxed_px)
      .def_readonly("relaxed_pu", &TighteningSchedule::relaxed_pu)
      .def("px_at", &TighteningSchedule::px_at, py::arg("k"), py::arg("p_bar_x"));

  py::class_<SafetyResult>(m, "SafetyResult")
      .def_readonly("schedule", &SafetyResult::schedule)
      .def_readonly("nominal_z", &SafetyResult::nominal_z)
      .def_readonly("nominal_v", &SafetyResult::nominal_v)
      .def_readonly("objective", &SafetyResult::objective);

  m.def(
      "solve_safety",
      [](const SynthesisContext& ctx, const ProblemInstance& inst) { return solve_safety(ctx, inst); },
      py::arg("ctx"), py::arg("instance"));

  py::class_<StaticProbabilityResult>(m, "StaticProbabilityResult")
      .def_readonly("probability", &StaticProbabilityResult::probability)
      .def_readonly("infeasible_at_zero", &StaticProbabilityResult::infeasible_at_zero)
      .def_readonly("feasible_at_target", &StaticProbabilityResult::feasible_at_target)
      .def_readonly("bisection_steps", &StaticProbabilityResult::bisection_steps);

  m.def("min_static_probability", &min_static_probability, py::arg("instance"),
        py::arg("options") = TighteningOptions{}, py::arg("tolerance") = 1e-3);

  py::class_<ClosedLoopOptions>(m, "ClosedLoopOptions")
      .def(py::init<>())
      .def_readwrite("zero_noise", &ClosedLoopOptions::zero_noise)
      .def_readwrite("check_candidate", &ClosedLoopOptions::check_candidate)
      .def_property(
          "xi_penalty", [](const ClosedLoopOptions& o) { return o.mpc.xi_penalty; },
          [](ClosedLoopOptions& o, double v) { o.mpc.xi_penalty = v; });

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("states", &Trajectory::states)
      .def_readonly("inputs", &Trajectory::inputs)
      .def_readonly("nominal_states", &Trajectory::nominal_states)
      .def_readonly("noise", &Trajectory::noise)
      .def_readonly("xi", &Trajectory::xi)
      .def_readonly("objectives", &Trajectory::objectives)
      .def_readonly("seed", &Trajectory::seed)
      .def_readonly("candidate_violation", &Trajectory::candidate_violation)
      .def_readonly("warm_start_excess", &Trajectory::warm_start_excess);

  m.def("run_closed_loop", &run_closed_loop, py::arg("instance"), py::arg("ctx"),
        py::arg("schedule"), py::arg("steps"), py::arg("seed"),
        py::arg("options") = ClosedLoopOptions{}, py::call_guard<py::gil_scoped_release>());

  py::class_<MonteCarloOptions>(m, "MonteCarloOptions")
      .def(py::init<>())
      .def_readwrite("closed_loop", &MonteCarloOptions::closed_loop)
      .def_readwrite("threads", &MonteCarloOptions::threads);

  py::class_<SimulationReport>(m, "SimulationReport")
      .def_readonly("trials", &SimulationReport::trials)
      .def_readonly("steps", &SimulationReport::steps)
      .def_readonly("rate", &SimulationReport::rate)
      .def_readonly("bound", &SimulationReport::bound)
      .def_readonly("lower_limit", &SimulationReport::lower_limit)
      .def_readonly("flagged", &SimulationReport::flagged)
      .def_readonly("prs_containment", &SimulationReport::prs_containment)
      .def_readonly("feasibility_failures", &SimulationReport::feasibility_failures)
      .def_readonly("mean_stage_cost", &SimulationReport::mean_stage_cost);

  m.def("monte_carlo", &monte_carlo, py::arg("instance"), py::arg("ctx"), py::arg("schedule"),
        py::arg("steps"), py::arg("trials"), py::arg("base_seed"),
        py::arg("options") = MonteCarloOptions{}, py::call_guard<py::gil_scoped_release>());
}
