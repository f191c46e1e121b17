#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynsmpc/csv.hpp"
#include "dynsmpc/model.hpp"
#include "dynsmpc/safety_lp.hpp"
#include "dynsmpc/synthesis.hpp"
#include "dynsmpc/tube_mpc.hpp"

namespace dynsmpc {

struct ClosedLoopOptions {
  MpcOptions mpc;
  bool zero_noise = false;  // w = 0; allowed for any noise family
  // Check the shifted candidate of step k-1 against the rows of step k and
  // the warm-start bound objective(k) <= cost of the candidate.
  bool check_candidate = false;
  double candidate_tol = 1e-7;
};

struct Trajectory {
  Matrix states;          // (T+1) x n
  Matrix inputs;          // T x m
  Matrix nominal_states;  // (T+1) x n: z_0(k) for k < T, z_1(T-1) last
  Matrix noise;           // T x n
  std::vector<int> xi;
  std::vector<double> objectives;
  std::vector<std::array<bool, 2>> branch_feasible;
  std::uint64_t seed = 0;
  // Filled when check_candidate is set: worst row violation of the shifted
  // candidate and worst excess of objective(k) over the candidate's objective.
  double candidate_violation = 0.0;
  double warm_start_excess = 0.0;

  int steps() const { return static_cast<int>(inputs.rows()); }
};

// Closed loop x(k+1) = A x(k) + B u(k) + w(k) under the tube MPC, with noise
// drawn from a generator seeded by `seed`. Propagates InfeasibleError.
Trajectory run_closed_loop(const ProblemInstance& instance, const SynthesisContext& ctx,
                           const TighteningSchedule& schedule, int steps, std::uint64_t seed,
                           const ClosedLoopOptions& options = {});

// Order-independent per-trial seed.
std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial);

struct SimulationReport {
  int trials = 0;
  int steps = 0;
  std::vector<double> rate;         // k = 0..T: fraction of trials with x(k) in X
  std::vector<double> bound;        // min(p_bar_x, p*(k))
  std::vector<double> lower_limit;  // bound - 3 sigma
  std::vector<int> flagged;         // k with rate < lower_limit
  std::vector<double> prs_containment;  // fraction with x(k) - z_0(k) in the level-p_bar PRS
  int feasibility_failures = 0;
  double mean_stage_cost = 0.0;  // x^T Q x + u^T R u averaged over completed steps
};

struct MonteCarloOptions {
  ClosedLoopOptions closed_loop;
  int threads = 1;
};

// M independent closed-loop runs from the shared x(0). A trial that hits an
// infeasible step counts as a failure and as outside X at every k >= 1.
// Throws std::invalid_argument for trials < 1, steps < 1, or noise that cannot
// be sampled.
SimulationReport monte_carlo(const ProblemInstance& instance, const SynthesisContext& ctx,
                             const TighteningSchedule& schedule, int steps, int trials,
                             std::uint64_t base_seed, const MonteCarloOptions& options = {});

// A pipeline stage failed; what() names the stage.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& detail, bool infeasible);

  const std::string& stage() const { return stage_; }
  bool infeasible() const { return infeasible_; }

 private:
  std::string stage_;
  bool infeasible_;
};

struct CaseStudyOptions {
  TighteningOptions tightening;
  MpcOptions mpc;
  std::uint64_t seed = 20190601;
  int steps = 100;
  double static_tolerance = 1e-3;
};

struct CaseStudyReport {
  SafetyResult safety;
  std::vector<int> support;  // k with alpha(k) > 1e-6
  StaticProbabilityResult static_result;
  Trajectory trajectory;
  // Over the safety-step nominal trajectory z(0..N).
  int z1_argmax = 0;
  std::vector<int> outside_tightened;  // k with z(k) outside X minus R_x (by > 1e-6)
  std::vector<std::filesystem::path> files;
};

// Runs the DC-DC converter case study and writes to out_dir:
//   schedule.csv        k, alpha, relaxed_px, z0.., v0.. (safety step)
//   relaxed_bounds.csv  k, target, relaxed (k = 0..T)
//   trajectory.csv      per-step MPC log of the measured run
//   tube.csv            k, vertex, x0.. : z(k) + (1 - alpha(k)) R_x vertices
//   support.csv         relaxed time steps
//   static.csv          static probability level
//   manifest.json
// Throws StageError naming the failing stage.
CaseStudyReport reproduce_case_study(const std::filesystem::path& out_dir,
                                     const CaseStudyOptions& options = {});

// Per-step MPC log: k, xi, objective, x.., z0.., u.., feasible_xi0, feasible_xi1.
CsvTable trajectory_table(const Trajectory& traj);

// Safety-step export: k, alpha, beta, relaxed_px, relaxed_pu, z.., v.. for
// k = 0..N-1 (beta columns only with an input constraint).
CsvTable schedule_table(const SafetyResult& safety);

// k, rate, bound, lower_limit, flagged, prs_containment.
CsvTable report_table(const SimulationReport& report);

}  // namespace dynsmpc
