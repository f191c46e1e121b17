#include "dynsmpc/simulator.hpp"

#include <atomic>
#include <cmath>
#include <optional>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "dynsmpc/errors.hpp"
#include "dynsmpc/setops.hpp"

namespace dynsmpc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct TrialOutcome {
  std::vector<char> inside;     // k = 0..T
  std::vector<char> contained;  // k = 0..T-1
  double cost = 0.0;
  int completed = 0;
  bool failed = false;
};

}  // namespace

std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial) {
  return splitmix64(splitmix64(base_seed) ^ splitmix64(trial + 0x632be59bd9b4e019ULL));
}

Trajectory run_closed_loop(const ProblemInstance& instance, const SynthesisContext& ctx,
                           const TighteningSchedule& schedule, int steps, std::uint64_t seed,
                           const ClosedLoopOptions& options) {
  if (steps < 1) throw std::invalid_argument("run_closed_loop: steps must be positive");
  const int n = instance.system.n();
  const int m = instance.system.m();
  std::optional<GaussianSampler> sampler;
  if (!options.zero_noise) sampler.emplace(instance.noise);
  std::mt19937_64 rng(seed);
  const ActiveSetQpSolver solver(options.mpc.qp);

  ControllerState state = make_controller(instance, ctx, schedule, options.mpc);
  Trajectory traj;
  traj.seed = seed;
  traj.states.resize(steps + 1, n);
  traj.inputs.resize(steps, m);
  traj.nominal_states.resize(steps + 1, n);
  traj.noise.resize(steps, n);
  traj.states.row(0) = instance.x0.transpose();

  Vector x = instance.x0;
  std::optional<MpcSolution> prev;
  for (int k = 0; k < steps; ++k) {
    std::optional<MpcCandidate> cand;
    double cand_objective = 0.0;
    if (options.check_candidate && prev) {
      cand = candidate_shift(*prev, ctx);
      const MpcQp qp = build_mpc_qp(state, x, true);
      traj.candidate_violation =
          std::max(traj.candidate_violation, plan_violation(qp, cand->v_bar));
      cand_objective = plan_cost(state, qp.z0, cand->v_bar) + options.mpc.xi_penalty;
    }

    MpcSolution sol = solve_mpc_step(state, x, solver);
    if (cand) {
      traj.warm_start_excess = std::max(traj.warm_start_excess, sol.objective - cand_objective);
    }

    const Vector w = sampler ? (*sampler)(rng) : Vector::Zero(n);
    traj.inputs.row(k) = sol.applied_input.transpose();
    traj.nominal_states.row(k) = sol.z_bar.row(0);
    traj.noise.row(k) = w.transpose();
    traj.xi.push_back(sol.xi ? 1 : 0);
    traj.objectives.push_back(sol.objective);
    traj.branch_feasible.push_back(sol.branch_feasible);

    x = instance.system.A * x + instance.system.B * sol.applied_input + w;
    traj.states.row(k + 1) = x.transpose();
    prev = std::move(sol);
  }
  traj.nominal_states.row(steps) = prev->z_bar.row(1);
  return traj;
}

SimulationReport monte_carlo(const ProblemInstance& instance, const SynthesisContext& ctx,
                             const TighteningSchedule& schedule, int steps, int trials,
                             std::uint64_t base_seed, const MonteCarloOptions& options) {
  if (trials < 1) throw std::invalid_argument("monte_carlo: trials must be positive");
  if (steps < 1) throw std::invalid_argument("monte_carlo: steps must be positive");
  if (!options.closed_loop.zero_noise) GaussianSampler probe(instance.noise);

  const Polytope& X = instance.constraints.state_set;
  const Matrix prs_inv = ctx.prs.state_prs.shape.inverse();
  std::vector<TrialOutcome> outcomes(trials);

  auto run_trial = [&](int t) {
    TrialOutcome& out = outcomes[t];
    out.inside.assign(steps + 1, 0);
    out.contained.assign(steps, 0);
    try {
      const Trajectory traj = run_closed_loop(instance, ctx, schedule, steps,
                                              trial_seed(base_seed, t), options.closed_loop);
      for (int k = 0; k <= steps; ++k) {
        out.inside[k] = contains(X, traj.states.row(k).transpose(), 0.0) ? 1 : 0;
      }
      for (int k = 0; k < steps; ++k) {
        const Vector e = (traj.states.row(k) - traj.nominal_states.row(k)).transpose();
        out.contained[k] = e.dot(prs_inv * e) <= 1.0 ? 1 : 0;
        const Vector xk = traj.states.row(k).transpose();
        const Vector uk = traj.inputs.row(k).transpose();
        out.cost += xk.dot(instance.Q * xk) + uk.dot(instance.R * uk);
      }
      out.completed = steps;
    } catch (const InfeasibleError&) {
      out.failed = true;
      out.inside[0] = contains(X, instance.x0, 0.0) ? 1 : 0;
    }
  };

  const int threads = std::max(1, std::min(options.threads, trials));
  if (threads == 1) {
    for (int t = 0; t < trials; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) {
      pool.emplace_back([&] {
        for (int t = next++; t < trials; t = next++) run_trial(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  SimulationReport rep;
  rep.trials = trials;
  rep.steps = steps;
  const double M = trials;
  double cost = 0.0;
  long completed = 0;
  rep.rate.assign(steps + 1, 0.0);
  rep.prs_containment.assign(steps, 0.0);
  for (const auto& out : outcomes) {
    if (out.failed) ++rep.feasibility_failures;
    for (int k = 0; k <= steps; ++k) rep.rate[k] += out.inside[k];
    for (int k = 0; k < steps; ++k) rep.prs_containment[k] += out.contained[k];
    cost += out.cost;
    completed += out.completed;
  }
  for (auto& r : rep.rate) r /= M;
  for (auto& r : rep.prs_containment) r /= M;
  rep.mean_stage_cost = completed > 0 ? cost / static_cast<double>(completed) : 0.0;

  const double p_bar = instance.constraints.p_bar_x;
  for (int k = 0; k <= steps; ++k) {
    const double p = schedule.px_at(k, p_bar);
    const double limit = p - 3.0 * std::sqrt(p * (1.0 - p) / M);
    rep.bound.push_back(p);
    rep.lower_limit.push_back(limit);
    if (rep.rate[k] < limit) rep.flagged.push_back(k);
  }
  return rep;
}

StageError::StageError(std::string stage, const std::string& detail, bool infeasible)
    : std::runtime_error(fmt::format("stage {}: {}", stage, detail)),
      stage_(std::move(stage)),
      infeasible_(infeasible) {}

CsvTable trajectory_table(const Trajectory& traj) {
  const int n = static_cast<int>(traj.states.cols());
  const int m = static_cast<int>(traj.inputs.cols());
  std::vector<std::string> header{"k", "xi", "objective"};
  for (const auto& c : indexed_columns("x", n)) header.push_back(c);
  for (const auto& c : indexed_columns("z0_", n)) header.push_back(c);
  for (const auto& c : indexed_columns("u", m)) header.push_back(c);
  header.push_back("feasible_xi0");
  header.push_back("feasible_xi1");
  CsvTable table(header);
  for (int k = 0; k < traj.steps(); ++k) {
    std::vector<std::string> row{std::to_string(k), std::to_string(traj.xi[k]),
                                 format_number(traj.objectives[k])};
    for (int i = 0; i < n; ++i) row.push_back(format_number(traj.states(k, i)));
    for (int i = 0; i < n; ++i) row.push_back(format_number(traj.nominal_states(k, i)));
    for (int j = 0; j < m; ++j) row.push_back(format_number(traj.inputs(k, j)));
    row.push_back(traj.branch_feasible[k][0] ? "1" : "0");
    row.push_back(traj.branch_feasible[k][1] ? "1" : "0");
    table.add_row(std::move(row));
  }
  return table;
}

CsvTable schedule_table(const SafetyResult& safety) {
  const TighteningSchedule& s = safety.schedule;
  const int N = s.horizon();
  const int n = static_cast<int>(safety.nominal_z.cols());
  const int m = static_cast<int>(safety.nominal_v.cols());
  const bool has_beta = s.beta.has_value();
  std::vector<std::string> header{"k", "alpha"};
  if (has_beta) header.push_back("beta");
  header.push_back("relaxed_px");
  if (has_beta) header.push_back("relaxed_pu");
  for (const auto& c : indexed_columns("z", n)) header.push_back(c);
  for (const auto& c : indexed_columns("v", m)) header.push_back(c);
  CsvTable table(header);
  for (int k = 0; k < N; ++k) {
    std::vector<std::string> row{std::to_string(k), format_number(s.alpha(k))};
    if (has_beta) row.push_back(format_number((*s.beta)(k)));
    row.push_back(format_number(s.relaxed_px(k)));
    if (has_beta) row.push_back(format_number((*s.relaxed_pu)(k)));
    for (int i = 0; i < n; ++i) row.push_back(format_number(safety.nominal_z(k, i)));
    for (int j = 0; j < m; ++j) row.push_back(format_number(safety.nominal_v(k, j)));
    table.add_row(std::move(row));
  }
  return table;
}

CsvTable report_table(const SimulationReport& report) {
  CsvTable table({"k", "rate", "bound", "lower_limit", "flagged", "prs_containment"});
  std::vector<char> flagged(report.rate.size(), 0);
  for (int k : report.flagged) flagged[k] = 1;
  for (std::size_t k = 0; k < report.rate.size(); ++k) {
    table.add_row({std::to_string(k), format_number(report.rate[k]),
                   format_number(report.bound[k]), format_number(report.lower_limit[k]),
                   flagged[k] ? "1" : "0",
                   k < report.prs_containment.size() ? format_number(report.prs_containment[k])
                                                     : ""});
  }
  return table;
}

CaseStudyReport reproduce_case_study(const std::filesystem::path& out_dir,
                                     const CaseStudyOptions& options) {
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const InfeasibleError& e) {
      throw StageError(name, e.what(), true);
    } catch (const std::exception& e) {
      throw StageError(name, e.what(), false);
    }
  };

  const ProblemInstance instance = dc_dc_converter_instance();
  CaseStudyReport rep;

  stage("output", [&] {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    return 0;
  });
  const SynthesisContext ctx =
      stage("synthesis", [&] { return build_context(instance, options.tightening); });
  rep.safety = stage("safety", [&] { return solve_safety(ctx, instance); });
  const TighteningSchedule& sched = rep.safety.schedule;
  for (int k = 0; k < sched.horizon(); ++k) {
    if (sched.alpha(k) > 1e-6) rep.support.push_back(k);
  }
  const Matrix& z = rep.safety.nominal_z;
  z.col(0).maxCoeff(&rep.z1_argmax);
  for (int k = 0; k <= sched.horizon(); ++k) {
    if (!contains(ctx.tightened_state, z.row(k).transpose(), 1e-6)) rep.outside_tightened.push_back(k);
  }

  rep.static_result = stage("static", [&] {
    return min_static_probability(instance, options.tightening, options.static_tolerance);
  });
  ClosedLoopOptions cl;
  cl.mpc = options.mpc;
  rep.trajectory = stage("closed_loop", [&] {
    return run_closed_loop(instance, ctx, sched, options.steps, options.seed, cl);
  });

  stage("export", [&] {
    const double p_bar = instance.constraints.p_bar_x;
    auto emit = [&](const std::string& name, const CsvTable& table) {
      table.write(out_dir / name);
      rep.files.push_back(out_dir / name);
    };
    emit("schedule.csv", schedule_table(rep.safety));

    CsvTable bounds({"k", "target", "relaxed"});
    for (int k = 0; k <= options.steps; ++k) {
      bounds.add_row({std::to_string(k), format_number(p_bar), format_number(sched.px_at(k, p_bar))});
    }
    emit("relaxed_bounds.csv", bounds);
    emit("trajectory.csv", trajectory_table(rep.trajectory));

    const int n = instance.system.n();
    std::vector<std::string> header{"k", "vertex"};
    for (const auto& c : indexed_columns("x", n)) header.push_back(c);
    CsvTable tube(header);
    const VertexSet base = zonotope_vertices(ctx.zono_x);
    for (int k = 0; k <= sched.horizon(); ++k) {
      const double scale = 1.0 - sched.alpha_at(k);
      for (std::size_t v = 0; v < base.size(); ++v) {
        const Vector p = z.row(k).transpose() + scale * base.vertices[v];
        std::vector<std::string> row{std::to_string(k), std::to_string(v)};
        for (int i = 0; i < n; ++i) row.push_back(format_number(p(i)));
        tube.add_row(std::move(row));
      }
    }
    emit("tube.csv", tube);

    CsvTable support({"k"});
    for (int k : rep.support) support.add_row({std::to_string(k)});
    emit("support.csv", support);

    CsvTable stat({"probability", "bisection_steps", "infeasible_at_zero", "feasible_at_target"});
    stat.add_row({format_number(rep.static_result.probability),
                  std::to_string(rep.static_result.bisection_steps),
                  rep.static_result.infeasible_at_zero ? "1" : "0",
                  rep.static_result.feasible_at_target ? "1" : "0"});
    emit("static.csv", stat);

    const std::string gens =
        options.tightening.generators ? std::to_string(*options.tightening.generators) : "box";
    write_manifest(out_dir / "manifest.json",
                   {{"version", version_string()},
                    {"run", "case-study"},
                    {"seed", std::to_string(options.seed)},
                    {"steps", std::to_string(options.steps)},
                    {"generators", gens},
                    {"qp_feasibility_tol", format_number(options.mpc.qp.feasibility_tol)},
                    {"xi_penalty", format_number(options.mpc.xi_penalty)},
                    {"static_tolerance", format_number(options.static_tolerance)}});
    rep.files.push_back(out_dir / "manifest.json");
    return 0;
  });
  return rep;
}

}  // namespace dynsmpc
