#pragma once

#include "dynsmpc/model.hpp"
#include "dynsmpc/optim.hpp"
#include "dynsmpc/reachability.hpp"
#include "dynsmpc/synthesis.hpp"

namespace dynsmpc {

// Variable layout of the safety LP: z(0..N), v(0..N-1), alpha(0..N-1) and,
// when the input is constrained, beta(0..N-1).
struct SafetyLpLayout {
  int N = 0;
  int n = 0;
  int m = 0;
  bool has_beta = false;

  int z(int k, int i) const { return k * n + i; }
  int v(int k, int j) const { return (N + 1) * n + k * m + j; }
  int alpha(int k) const { return (N + 1) * n + N * m + k; }
  int beta(int k) const { return (N + 1) * n + N * m + N + k; }
  int num_vars() const { return (N + 1) * n + N * m + N * (has_beta ? 2 : 1); }
};

struct SafetyLp {
  LinearProgram lp;
  SafetyLpLayout layout;
};

// min sum alpha + beta subject to the nominal dynamics (equality rows),
// A_x z(k) <= b_x - (1 - alpha(k)) h_x, A_u v(k) <= b_u - (1 - beta(k)) h_u,
// A_F z(N) <= b_F, z(0) = x(0) (fixed bounds) and alpha, beta in [0, 1].
SafetyLp build_safety_lp(const SynthesisContext& ctx, const ProblemInstance& instance);

struct SafetyResult {
  TighteningSchedule schedule;
  Matrix nominal_z;  // (N+1) x n
  Matrix nominal_v;  // N x m
  double objective = 0.0;           // sum alpha + beta
  double probability_shortfall = 0.0;  // sum |p_bar - p(k)| over state and input
  Vector solution;                  // raw LP vector in SafetyLpLayout order
};

// Throws InfeasibleError("safety step infeasible") when no relaxation
// schedule admits a nominal trajectory from x(0).
SafetyResult solve_safety(const SynthesisContext& ctx, const ProblemInstance& instance,
                          const LpSolver& solver = SimplexSolver());

struct StaticProbabilityResult {
  double probability = 0.0;
  bool infeasible_at_zero = false;  // not even p = 0 is feasible; probability reported as 0
  bool feasible_at_target = false;  // the target level itself is feasible without relaxation
  int bisection_steps = 0;
};

// Largest state probability level p <= p_bar_x for which the static problem
// (no relaxation, tightening and terminal set rebuilt at level p) is feasible
// from x(0), by bisection to `tolerance`.
StaticProbabilityResult min_static_probability(const ProblemInstance& instance,
                                               const TighteningOptions& options = {},
                                               double tolerance = 1e-3);

// True iff the static problem at the context's levels is feasible from x(0).
bool static_problem_feasible(const SynthesisContext& ctx, const ProblemInstance& instance,
                             const LpSolver& solver = SimplexSolver());

}  // namespace dynsmpc
