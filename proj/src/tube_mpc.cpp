#include "dynsmpc/tube_mpc.hpp"

#include <stdexcept>

#include "dynsmpc/errors.hpp"

namespace dynsmpc {

namespace {

Prediction build_prediction(const LtiSystem& sys, const GainPack& gains, int N) {
  const int n = sys.n();
  const int m = sys.m();
  Prediction p;
  p.Phi = Matrix::Zero((N + 1) * n, n);
  p.Gamma = Matrix::Zero((N + 1) * n, N * m);
  p.Phi.topRows(n) = Matrix::Identity(n, n);
  for (int i = 1; i <= N; ++i) {
    p.Phi.middleRows(i * n, n) = sys.A * p.Phi.middleRows((i - 1) * n, n);
    p.Gamma.middleRows(i * n, n) = sys.A * p.Gamma.middleRows((i - 1) * n, n);
    p.Gamma.block(i * n, (i - 1) * m, n, m) = sys.B;
  }
  // r_i = v_i - K z_i
  p.Mv = Matrix::Identity(N * m, N * m);
  p.Mz = Matrix::Zero(N * m, n);
  p.S_blk = Matrix::Zero(N * m, N * m);
  for (int i = 0; i < N; ++i) {
    p.Mv.middleRows(i * m, m) -= gains.K * p.Gamma.middleRows(i * n, n);
    p.Mz.middleRows(i * m, m) = -gains.K * p.Phi.middleRows(i * n, n);
    p.S_blk.block(i * m, i * m, m, m) = gains.S;
  }
  p.H = 2.0 * p.Mv.transpose() * p.S_blk * p.Mv;
  p.H = 0.5 * (p.H + p.H.transpose());
  return p;
}

void append_rows(QuadraticProgram& qp, const Matrix& A, const Vector& b) {
  const Eigen::Index r0 = qp.A_in.rows();
  qp.A_in.conservativeResize(r0 + A.rows(), A.cols());
  qp.b_in.conservativeResize(r0 + b.size());
  qp.A_in.bottomRows(A.rows()) = A;
  qp.b_in.tail(b.size()) = b;
}

}  // namespace

ControllerState make_controller(const ProblemInstance& instance, const SynthesisContext& ctx,
                                const TighteningSchedule& schedule, const MpcOptions& options) {
  ControllerState s;
  s.system = instance.system;
  s.ctx = ctx;
  s.schedule = schedule;
  s.state_set = instance.constraints.state_set;
  s.input_set = instance.constraints.input_set;
  s.horizon = instance.horizon;
  s.options = options;
  s.prediction = build_prediction(instance.system, ctx.gains, instance.horizon);
  s.prev_z1 = instance.x0;
  s.step = 0;
  return s;
}

MpcQp build_mpc_qp(const ControllerState& state, const Vector& x_k, bool xi) {
  const int N = state.horizon;
  const int n = state.system.n();
  const int m = state.system.m();
  const int k = state.step;
  const Prediction& pr = state.prediction;
  const SynthesisContext& ctx = state.ctx;

  MpcQp out;
  out.xi = xi;
  out.z0 = xi ? state.prev_z1 : x_k;
  const Vector r0 = pr.Mz * out.z0;
  out.qp.H = pr.H;
  out.qp.f = 2.0 * pr.Mv.transpose() * pr.S_blk * r0;
  out.constant = r0.dot(pr.S_blk * r0);
  out.qp.A_eq.resize(0, N * m);
  out.qp.b_eq.resize(0);
  out.qp.A_in.resize(0, N * m);
  out.qp.b_in.resize(0);

  const Polytope& X = state.state_set;
  for (int i = 0; i < N; ++i) {
    const double scale = 1.0 - state.schedule.alpha_at(k + i);
    const Vector rhs = X.b - scale * ctx.margins_x - X.A * pr.Phi.middleRows(i * n, n) * out.z0;
    append_rows(out.qp, X.A * pr.Gamma.middleRows(i * n, n), rhs);
  }
  if (state.input_set) {
    const Polytope& U = *state.input_set;
    for (int i = 0; i < N; ++i) {
      const double scale = 1.0 - state.schedule.beta_at(k + i);
      Matrix A = Matrix::Zero(U.rows(), N * m);
      A.middleCols(i * m, m) = U.A;
      append_rows(out.qp, A, U.b - scale * *ctx.margins_u);
    }
  }
  const Polytope& ZF = ctx.terminal_set;
  append_rows(out.qp, ZF.A * pr.Gamma.middleRows(N * n, n),
              ZF.b - ZF.A * pr.Phi.middleRows(N * n, n) * out.z0);
  return out;
}

Vector flatten_plan(const Matrix& v_bar) {
  Vector v(v_bar.size());
  for (Eigen::Index i = 0; i < v_bar.rows(); ++i) v.segment(i * v_bar.cols(), v_bar.cols()) = v_bar.row(i).transpose();
  return v;
}

double plan_cost(const ControllerState& state, const Vector& z0, const Matrix& v_bar) {
  const Prediction& pr = state.prediction;
  const Vector r = pr.Mv * flatten_plan(v_bar) + pr.Mz * z0;
  return r.dot(pr.S_blk * r);
}

double plan_violation(const MpcQp& qp, const Matrix& v_bar) {
  return qp_violation(qp.qp, flatten_plan(v_bar));
}

MpcSolution solve_mpc_step(ControllerState& state, const Vector& x_k, const QpSolver& solver) {
  const int N = state.horizon;
  const int n = state.system.n();
  const int m = state.system.m();
  if (x_k.size() != n) throw std::invalid_argument("solve_mpc_step: state dimension mismatch");

  MpcSolution sol;
  sol.step = state.step;
  int best = -1;
  Vector best_v;
  Vector best_z0;
  for (int branch = 0; branch < 2; ++branch) {
    const MpcQp qp = build_mpc_qp(state, x_k, branch == 1);
    const QpResult res = solver.solve(qp.qp);
    if (res.status != SolveStatus::kOptimal) continue;
    const double cost = res.objective + qp.constant;
    const double total = cost + state.options.xi_penalty * branch;
    sol.branch_feasible[branch] = true;
    sol.branch_objective[branch] = total;
    if (best < 0 || total < sol.branch_objective[best]) {
      best = branch;
      best_v = res.x;
      best_z0 = qp.z0;
      sol.cost = cost;
      sol.objective = total;
    }
  }
  if (best < 0) throw InfeasibleError("recursive feasibility violated");

  sol.xi = best == 1;
  sol.v_bar.resize(N, m);
  for (int i = 0; i < N; ++i) sol.v_bar.row(i) = best_v.segment(i * m, m).transpose();
  const Vector z = state.prediction.Phi * best_z0 + state.prediction.Gamma * best_v;
  sol.z_bar.resize(N + 1, n);
  for (int i = 0; i <= N; ++i) sol.z_bar.row(i) = z.segment(i * n, n).transpose();
  sol.applied_input = sol.v_bar.row(0).transpose() + state.ctx.gains.K * (x_k - best_z0);

  state.prev_z1 = sol.z_bar.row(1).transpose();
  ++state.step;
  return sol;
}

MpcCandidate candidate_shift(const MpcSolution& prev, const SynthesisContext& ctx) {
  const Eigen::Index N = prev.v_bar.rows();
  MpcCandidate c;
  c.v_bar.resize(N, prev.v_bar.cols());
  c.z_bar.resize(N + 1, prev.z_bar.cols());
  c.v_bar.topRows(N - 1) = prev.v_bar.bottomRows(N - 1);
  const Vector zN = prev.z_bar.row(N).transpose();
  c.v_bar.row(N - 1) = (ctx.gains.K * zN).transpose();
  c.z_bar.topRows(N) = prev.z_bar.bottomRows(N);
  c.z_bar.row(N) = (ctx.AK * zN).transpose();
  return c;
}

}  // namespace dynsmpc
