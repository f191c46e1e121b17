#include "dynsmpc/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "dynsmpc/errors.hpp"
#include "dynsmpc/setops.hpp"

namespace dynsmpc {

namespace {

Matrix gain_for(const Matrix& A, const Matrix& B, const Matrix& R, const Matrix& P) {
  const Matrix S = R + B.transpose() * P * B;
  return -S.ldlt().solve(B.transpose() * P * A);
}

}  // namespace

GainPack solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                    const DareOptions& options) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != m ||
      R.cols() != m) {
    throw std::invalid_argument("solve_dare: dimension mismatch");
  }

  Matrix P = Q;
  GainPack out;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Matrix K = gain_for(A, B, R, P);
    Matrix next = A.transpose() * P * A + A.transpose() * P * B * K + Q;
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) throw SolveError("DARE failed: iteration diverged");
    const double change = (next - P).norm();
    P = std::move(next);
    if (change <= options.tolerance * P.norm()) {
      out.iterations = it;
      break;
    }
    if (it == options.max_iterations) {
      throw SolveError(fmt::format("DARE failed: no convergence in {} iterations", it));
    }
  }
  out.P = P;
  out.K = gain_for(A, B, R, P);
  out.S = R + B.transpose() * P * B;
  out.S = 0.5 * (out.S + out.S.transpose());

  if (spectral_radius(A + B * out.K) >= 1.0) {
    throw SolveError("DARE failed: closed loop not stable (pair not stabilizable?)");
  }
  if (dare_residual(A, B, Q, out) > 1e-9 * P.norm()) {
    throw SolveError("DARE failed: residual above tolerance");
  }
  return out;
}

double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const GainPack& gains) {
  const Matrix& P = gains.P;
  return (A.transpose() * P * A + A.transpose() * P * B * gains.K + Q - P).norm();
}

SynthesisContext build_context_at(const ProblemInstance& instance, double p_bar_x,
                                  std::optional<double> p_bar_u,
                                  const TighteningOptions& options) {
  ProblemInstance inst = instance;
  inst.constraints.p_bar_x = p_bar_x;
  inst.constraints.p_bar_u = p_bar_u;
  const auto violations = validate_instance(inst);
  if (!is_valid(violations)) {
    std::string msg = "invalid problem instance:";
    for (const auto& v : violations) {
      if (v.severity == Violation::Severity::kError) msg += " " + v.message + ";";
    }
    throw std::invalid_argument(msg);
  }

  const LtiSystem& sys = inst.system;
  const int n = sys.n();
  const int m = sys.m();

  SynthesisContext ctx;
  ctx.gains = solve_dare(sys.A, sys.B, inst.Q, inst.R, options.dare);
  ctx.AK = sys.A + sys.B * ctx.gains.K;
  ctx.scale_family = options.scale_family.value_or(inst.noise.family);
  ctx.prs = build_prs(sys, inst.noise, ctx.gains.K, p_bar_x, p_bar_u, ctx.scale_family);

  ctx.zono_x = ellipsoid_to_zonotope(ctx.prs.state_prs, options.generators.value_or(n));
  ctx.margins_x = support_margins(inst.constraints.state_set, ctx.zono_x);
  ctx.tightened_state = tighten(inst.constraints.state_set, ctx.zono_x, 1.0);

  if (inst.constraints.input_set) {
    ctx.zono_u =
        ellipsoid_to_zonotope(*ctx.prs.input_prs, std::max(m, options.generators.value_or(m)));
    ctx.margins_u = support_margins(*inst.constraints.input_set, *ctx.zono_u);
    ctx.tightened_input = tighten(*inst.constraints.input_set, *ctx.zono_u, 1.0);
  }

  ctx.terminal_set = mpi_terminal_set(ctx.AK, ctx.gains.K, ctx.tightened_state,
                                      ctx.tightened_input, options.mpi_max_iterations);

  // Z_F inside Z (row-wise) and K Z_F inside V.
  SimplexSolver solver;
  for (int i = 0; i < ctx.tightened_state.rows(); ++i) {
    const auto mx = maximize(ctx.terminal_set, ctx.tightened_state.A.row(i).transpose(), solver);
    if (!mx || *mx > ctx.tightened_state.b(i) + 1e-7) {
      throw SolveError("terminal set not contained in the tightened state set");
    }
  }
  return ctx;
}

SynthesisContext build_context(const ProblemInstance& instance, const TighteningOptions& options) {
  return build_context_at(instance, instance.constraints.p_bar_x, instance.constraints.p_bar_u,
                          options);
}

}  // namespace dynsmpc
