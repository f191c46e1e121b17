#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dynsmpc/config.hpp"
#include "dynsmpc/csv.hpp"
#include "dynsmpc/errors.hpp"
#include "dynsmpc/safety_lp.hpp"
#include "dynsmpc/setops.hpp"
#include "dynsmpc/simulator.hpp"
#include "dynsmpc/synthesis.hpp"

#ifndef DYNSMPC_GOLDEN_DIR
#define DYNSMPC_GOLDEN_DIR ""
#endif

namespace dynsmpc::cli {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int trials = 100;
  int steps = 100;
  std::optional<int> generators;
  bool check = false;
  std::string golden = DYNSMPC_GOLDEN_DIR;
  double alpha = 0.0;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunConfig load(const Flags& f) {
  RunConfig cfg = load_config(f.config);
  if (f.generators) {
    if (*f.generators < cfg.instance.system.n()) {
      throw ConfigError("--generators", 0,
                        fmt::format("need at least {} generators", cfg.instance.system.n()));
    }
    cfg.tightening.generators = f.generators;
  }
  if (f.seed) cfg.seed = *f.seed;
  return cfg;
}

std::vector<std::pair<std::string, std::string>> manifest_base(const RunConfig& cfg,
                                                               const std::string& run) {
  return {{"version", version_string()},
          {"run", run},
          {"config_hash", hex64(cfg.hash)},
          {"seed", std::to_string(cfg.seed)},
          {"generators", cfg.tightening.generators ? std::to_string(*cfg.tightening.generators)
                                                   : "box"},
          {"lp_feasibility_tol", format_number(cfg.lp.feasibility_tol)},
          {"lp_optimality_tol", format_number(cfg.lp.optimality_tol)},
          {"qp_feasibility_tol", format_number(cfg.mpc.qp.feasibility_tol)},
          {"dare_tolerance", format_number(cfg.tightening.dare.tolerance)},
          {"xi_penalty", format_number(cfg.mpc.xi_penalty)}};
}

CsvTable bounds_table(const TighteningSchedule& s, double p_bar, int last_k) {
  CsvTable t({"k", "target", "relaxed"});
  for (int k = 0; k <= last_k; ++k) {
    t.add_row({std::to_string(k), format_number(p_bar), format_number(s.px_at(k, p_bar))});
  }
  return t;
}

std::string support_text(const TighteningSchedule& s) {
  std::vector<int> ks;
  for (int k = 0; k < s.horizon(); ++k) {
    if (s.alpha(k) > 1e-6) ks.push_back(k);
  }
  return fmt::format("{{{}}}", fmt::join(ks, ", "));
}

int cmd_synthesize(const Flags& f, std::ostream& out) {
  const RunConfig cfg = load(f);
  const SynthesisContext ctx = build_context(cfg.instance, cfg.tightening);
  const SafetyResult safety = solve_safety(ctx, cfg.instance, SimplexSolver(cfg.lp));
  const fs::path dir(f.out);
  ensure_dir(dir);
  schedule_table(safety).write(dir / "schedule.csv");
  bounds_table(safety.schedule, cfg.instance.constraints.p_bar_x, cfg.instance.horizon)
      .write(dir / "relaxed_bounds.csv");
  auto entries = manifest_base(cfg, "synthesize");
  entries.emplace_back("objective", format_number(safety.objective));
  write_manifest(dir / "manifest.json", entries);
  out << "relaxed steps: " << support_text(safety.schedule) << "\n";
  out << "sum of relaxations: " << format_number(safety.objective) << "\n";
  return kOk;
}

int cmd_simulate(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.trials < 1) throw ConfigError("--trials", 0, "must be at least 1");
  if (f.steps < 1) throw ConfigError("--steps", 0, "must be at least 1");
  const RunConfig cfg = load(f);
  if (cfg.instance.noise.family == NoiseFamily::kMomentOnly) {
    throw ConfigError(f.config, 0, "no sampling distribution for moment-only noise");
  }
  const SynthesisContext ctx = build_context(cfg.instance, cfg.tightening);
  const SafetyResult safety = solve_safety(ctx, cfg.instance, SimplexSolver(cfg.lp));
  MonteCarloOptions mc;
  mc.closed_loop.mpc = cfg.mpc;
  const SimulationReport rep =
      monte_carlo(cfg.instance, ctx, safety.schedule, f.steps, f.trials, cfg.seed, mc);

  const fs::path dir(f.out);
  ensure_dir(dir);
  schedule_table(safety).write(dir / "schedule.csv");
  report_table(rep).write(dir / "report.csv");
  if (rep.feasibility_failures == 0) {
    ClosedLoopOptions cl;
    cl.mpc = cfg.mpc;
    const Trajectory traj = run_closed_loop(cfg.instance, ctx, safety.schedule, f.steps,
                                            trial_seed(cfg.seed, 0), cl);
    trajectory_table(traj).write(dir / "trajectory_trial0.csv");
  }
  auto entries = manifest_base(cfg, "simulate");
  entries.emplace_back("trials", std::to_string(f.trials));
  entries.emplace_back("steps", std::to_string(f.steps));
  entries.emplace_back("trial_seed_rule", "splitmix64(splitmix64(seed) ^ splitmix64(trial + c))");
  entries.emplace_back("feasibility_failures", std::to_string(rep.feasibility_failures));
  entries.emplace_back("flagged_steps", std::to_string(rep.flagged.size()));
  entries.emplace_back("mean_stage_cost", format_number(rep.mean_stage_cost));
  write_manifest(dir / "manifest.json", entries);

  out << "infeasible trials: " << rep.feasibility_failures << "\n";
  out << "flagged steps: " << rep.flagged.size() << "\n";
  out << "mean stage cost: " << format_number(rep.mean_stage_cost) << "\n";
  if (rep.feasibility_failures > 0 || !rep.flagged.empty()) {
    err << "runtime violation observed\n";
    return kRuntimeViolation;
  }
  return kOk;
}

int cmd_case_study(const Flags& f, std::ostream& out, std::ostream& err) {
  CaseStudyOptions opt;
  if (f.generators) opt.tightening.generators = f.generators;
  if (f.seed) opt.seed = *f.seed;
  opt.steps = f.steps;
  const fs::path dir(f.out);
  const CaseStudyReport rep = reproduce_case_study(dir, opt);
  out << "relaxed steps: " << support_text(rep.safety.schedule) << "\n";
  out << "static probability level: " << format_number(rep.static_result.probability) << "\n";
  out << "nominal outside the fully tightened set at k = "
      << fmt::format("{{{}}}", fmt::join(rep.outside_tightened, ", ")) << "\n";
  if (!f.check) return kOk;

  int status = kOk;
  const fs::path golden = fs::path(f.golden) / "support.csv";
  const std::string expected = read_file(golden);
  if (expected.empty()) {
    err << "check: cannot read " << golden.string() << "\n";
    return kConfigError;
  }
  if (read_file(dir / "support.csv") != expected) {
    err << "check: support.csv differs from " << golden.string() << "\n";
    status = kRuntimeViolation;
  }
  const double p = rep.static_result.probability;
  if (p < 0.22 || p > 0.32) {
    err << "check: static probability " << format_number(p) << " outside [0.22, 0.32]\n";
    status = kRuntimeViolation;
  }
  if (status == kOk) out << "check: ok\n";
  return status;
}

int cmd_tighten(const Flags& f, std::ostream& out) {
  if (f.alpha < 0.0 || f.alpha > 1.0) throw ConfigError("--alpha", 0, "must lie in [0, 1]");
  const RunConfig cfg = load(f);
  const SynthesisContext ctx = build_context(cfg.instance, cfg.tightening);
  const Polytope set = tighten(cfg.instance.constraints.state_set, ctx.zono_x, 1.0 - f.alpha);
  const VertexSet verts = polytope_vertices(set);
  const fs::path dir(f.out);
  ensure_dir(dir);
  const int n = cfg.instance.system.n();
  std::vector<std::string> header{"vertex"};
  for (const auto& c : indexed_columns("x", n)) header.push_back(c);
  CsvTable table(header);
  for (std::size_t v = 0; v < verts.size(); ++v) {
    std::vector<std::string> row{std::to_string(v)};
    for (int i = 0; i < n; ++i) row.push_back(format_number(verts.vertices[v](i)));
    table.add_row(std::move(row));
  }
  table.write(dir / "tightened_vertices.csv");
  auto entries = manifest_base(cfg, "tighten");
  entries.emplace_back("alpha", format_number(f.alpha));
  write_manifest(dir / "manifest.json", entries);
  out << "vertices: " << verts.size() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic MPC with dynamic chance constraints", "dynsmpc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version_string()));
  Flags f;

  auto* synth = app.add_subcommand("synthesize", "Safety step: relaxation schedule and bounds");
  synth->add_option("--config", f.config, "Configuration file (JSON)")->required();
  synth->add_option("--out", f.out, "Output directory")->required();
  synth->add_option("--generators", f.generators, "Zonotope generator count");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo closed-loop runs");
  sim->add_option("--config", f.config, "Configuration file (JSON)")->required();
  sim->add_option("--out", f.out, "Output directory")->required();
  sim->add_option("--seed", f.seed, "Base seed (default: config seed)");
  sim->add_option("--trials", f.trials, "Number of trials")->capture_default_str();
  sim->add_option("--steps", f.steps, "Steps per trial")->capture_default_str();
  sim->add_option("--generators", f.generators, "Zonotope generator count");

  auto* cs = app.add_subcommand("case-study", "DC-DC converter case study");
  cs->add_option("--out", f.out, "Output directory")->required();
  cs->add_option("--seed", f.seed, "Seed of the measured run");
  cs->add_option("--steps", f.steps, "Closed-loop steps")->capture_default_str();
  cs->add_option("--generators", f.generators, "Zonotope generator count");
  cs->add_flag("--check", f.check, "Compare against stored goldens");
  cs->add_option("--golden", f.golden, "Golden directory")->capture_default_str();

  auto* tt = app.add_subcommand("tighten", "Vertices of X minus (1 - alpha) R_x");
  tt->add_option("--config", f.config, "Configuration file (JSON)")->required();
  tt->add_option("--out", f.out, "Output directory")->required();
  tt->add_option("--alpha", f.alpha, "Relaxation amount in [0, 1]")->capture_default_str();
  tt->add_option("--generators", f.generators, "Zonotope generator count");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (synth->parsed()) return cmd_synthesize(f, out);
    if (sim->parsed()) return cmd_simulate(f, out, err);
    if (cs->parsed()) return cmd_case_study(f, out, err);
    if (tt->parsed()) return cmd_tighten(f, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const StageError& e) {
    err << "error: " << e.what() << "\n";
    if (e.stage() == "output" || e.stage() == "export") return kConfigError;
    return e.infeasible() ? kSafetyInfeasible : kRuntimeViolation;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kSafetyInfeasible;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeViolation;
  }
  return kConfigError;
}

}  // namespace dynsmpc::cli
