#include "dynsmpc/safety_lp.hpp"

#include <cmath>

#include "dynsmpc/errors.hpp"

namespace dynsmpc {

SafetyLp build_safety_lp(const SynthesisContext& ctx, const ProblemInstance& instance) {
  const LtiSystem& sys = instance.system;
  const auto& cons = instance.constraints;
  SafetyLp out;
  SafetyLpLayout& L = out.layout;
  L.N = instance.horizon;
  L.n = sys.n();
  L.m = sys.m();
  L.has_beta = cons.input_set.has_value();
  const int N = L.N;
  const int n = L.n;
  const int m = L.m;
  const int nv = L.num_vars();

  LinearProgram& lp = out.lp;
  lp = LinearProgram::free(nv);
  for (int k = 0; k < N; ++k) {
    lp.cost(L.alpha(k)) = 1.0;
    lp.lower(L.alpha(k)) = 0.0;
    lp.upper(L.alpha(k)) = 1.0;
    if (L.has_beta) {
      lp.cost(L.beta(k)) = 1.0;
      lp.lower(L.beta(k)) = 0.0;
      lp.upper(L.beta(k)) = 1.0;
    }
  }
  for (int i = 0; i < n; ++i) {
    lp.lower(L.z(0, i)) = instance.x0(i);
    lp.upper(L.z(0, i)) = instance.x0(i);
  }

  // z(k+1) - A z(k) - B v(k) = 0
  lp.A_eq = Matrix::Zero(n * N, nv);
  lp.b_eq = Vector::Zero(n * N);
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < n; ++i) {
      const int row = k * n + i;
      lp.A_eq(row, L.z(k + 1, i)) = 1.0;
      for (int j = 0; j < n; ++j) lp.A_eq(row, L.z(k, j)) -= sys.A(i, j);
      for (int j = 0; j < m; ++j) lp.A_eq(row, L.v(k, j)) -= sys.B(i, j);
    }
  }

  const Polytope& X = cons.state_set;
  const int qx = X.rows();
  const int qu = L.has_beta ? cons.input_set->rows() : 0;
  const Polytope& ZF = ctx.terminal_set;
  const int rows = qx * N + qu * N + ZF.rows();
  lp.A_in = Matrix::Zero(rows, nv);
  lp.b_in = Vector::Zero(rows);
  int r = 0;
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < qx; ++i, ++r) {
      for (int j = 0; j < n; ++j) lp.A_in(r, L.z(k, j)) = X.A(i, j);
      lp.A_in(r, L.alpha(k)) = -ctx.margins_x(i);
      lp.b_in(r) = X.b(i) - ctx.margins_x(i);
    }
  }
  if (L.has_beta) {
    const Polytope& U = *cons.input_set;
    for (int k = 0; k < N; ++k) {
      for (int i = 0; i < qu; ++i, ++r) {
        for (int j = 0; j < m; ++j) lp.A_in(r, L.v(k, j)) = U.A(i, j);
        lp.A_in(r, L.beta(k)) = -(*ctx.margins_u)(i);
        lp.b_in(r) = U.b(i) - (*ctx.margins_u)(i);
      }
    }
  }
  for (int i = 0; i < ZF.rows(); ++i, ++r) {
    for (int j = 0; j < n; ++j) lp.A_in(r, L.z(N, j)) = ZF.A(i, j);
    lp.b_in(r) = ZF.b(i);
  }
  return out;
}

SafetyResult solve_safety(const SynthesisContext& ctx, const ProblemInstance& instance,
                          const LpSolver& solver) {
  const SafetyLp built = build_safety_lp(ctx, instance);
  const SafetyLpLayout& L = built.layout;
  const LpResult res = solver.solve(built.lp);
  if (res.status == SolveStatus::kInfeasible) throw InfeasibleError("safety step infeasible");
  if (res.status != SolveStatus::kOptimal) {
    throw SolveError(std::string("safety LP: ") + to_string(res.status));
  }

  SafetyResult out;
  out.solution = res.x;
  Vector alpha(L.N);
  std::optional<Vector> beta;
  if (L.has_beta) beta = Vector(L.N);
  out.nominal_v.resize(L.N, L.m);
  for (int k = 0; k < L.N; ++k) {
    alpha(k) = res.x(L.alpha(k));
    if (beta) (*beta)(k) = res.x(L.beta(k));
    for (int j = 0; j < L.m; ++j) out.nominal_v(k, j) = res.x(L.v(k, j));
  }
  // Nominal states by exact rollout of the optimal inputs.
  out.nominal_z.resize(L.N + 1, L.n);
  out.nominal_z.row(0) = instance.x0.transpose();
  for (int k = 0; k < L.N; ++k) {
    out.nominal_z.row(k + 1) = (instance.system.A * out.nominal_z.row(k).transpose() +
                                instance.system.B * out.nominal_v.row(k).transpose())
                                   .transpose();
  }

  const auto& cons = instance.constraints;
  out.schedule = make_schedule(alpha, beta, cons.p_bar_x, cons.p_bar_u, L.n, L.m, ctx.scale_family);
  out.objective = out.schedule.alpha.sum() + (beta ? out.schedule.beta->sum() : 0.0);
  for (int k = 0; k < L.N; ++k) {
    out.probability_shortfall += std::abs(cons.p_bar_x - out.schedule.relaxed_px(k));
    if (beta) out.probability_shortfall += std::abs(*cons.p_bar_u - (*out.schedule.relaxed_pu)(k));
  }
  return out;
}

bool static_problem_feasible(const SynthesisContext& ctx, const ProblemInstance& instance,
                             const LpSolver& solver) {
  SafetyLp built = build_safety_lp(ctx, instance);
  const SafetyLpLayout& L = built.layout;
  for (int k = 0; k < L.N; ++k) {
    built.lp.upper(L.alpha(k)) = 0.0;
    if (L.has_beta) built.lp.upper(L.beta(k)) = 0.0;
  }
  const LpResult res = solver.solve(built.lp);
  if (res.status == SolveStatus::kOptimal) return true;
  if (res.status == SolveStatus::kInfeasible) return false;
  throw SolveError(std::string("static feasibility LP: ") + to_string(res.status));
}

StaticProbabilityResult min_static_probability(const ProblemInstance& instance,
                                               const TighteningOptions& options,
                                               double tolerance) {
  const double target = instance.constraints.p_bar_x;
  auto feasible = [&](double p) {
    try {
      const SynthesisContext ctx =
          build_context_at(instance, p, instance.constraints.p_bar_u, options);
      return static_problem_feasible(ctx, instance);
    } catch (const InfeasibleError&) {
      return false;
    }
  };

  StaticProbabilityResult out;
  if (feasible(target)) {
    out.probability = target;
    out.feasible_at_target = true;
    return out;
  }
  if (!feasible(0.0)) {
    out.infeasible_at_zero = true;
    return out;
  }
  double lo = 0.0;
  double hi = target;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++out.bisection_steps;
  }
  out.probability = lo;
  return out;
}

}  // namespace dynsmpc
