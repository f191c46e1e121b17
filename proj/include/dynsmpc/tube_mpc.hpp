#pragma once

#include <array>
#include <optional>

#include "dynsmpc/model.hpp"
#include "dynsmpc/optim.hpp"
#include "dynsmpc/reachability.hpp"
#include "dynsmpc/synthesis.hpp"

namespace dynsmpc {

struct MpcOptions {
  // Linear penalty lambda * xi on re-using the previous nominal state.
  double xi_penalty = 1e-3;
  QpOptions qp;
};

// Stacked predictions z = Phi z0 + Gamma v over i = 0..N and the condensed
// cost sum_i |v_i - K z_i|_S^2 = |Mv v + Mz z0|^2_{blkdiag S}.
struct Prediction {
  Matrix Phi;     // (N+1)n x n
  Matrix Gamma;   // (N+1)n x Nm
  Matrix Mv;      // Nm x Nm
  Matrix Mz;      // Nm x n
  Matrix S_blk;   // Nm x Nm
  Matrix H;       // 2 Mv^T S Mv
};

struct ControllerState {
  LtiSystem system;
  SynthesisContext ctx;
  TighteningSchedule schedule;
  Polytope state_set;
  std::optional<Polytope> input_set;
  int horizon = 1;
  MpcOptions options;
  Prediction prediction;
  Vector prev_z1;  // z_1(k-1); x(0) before the first step
  int step = 0;
};

ControllerState make_controller(const ProblemInstance& instance, const SynthesisContext& ctx,
                                const TighteningSchedule& schedule, const MpcOptions& options = {});

// Condensed QP over v = (v_0, ..., v_{N-1}) for one xi branch at the
// controller's current step.
struct MpcQp {
  QuadraticProgram qp;
  Vector z0;
  double constant = 0.0;  // cost at v = 0 not captured by qp
  bool xi = false;
};

MpcQp build_mpc_qp(const ControllerState& state, const Vector& x_k, bool xi);

struct MpcSolution {
  Matrix v_bar;  // N x m
  Matrix z_bar;  // (N+1) x n
  bool xi = false;
  double cost = 0.0;       // sum |v_i - K z_i|_S^2
  double objective = 0.0;  // cost + lambda * xi
  Vector applied_input;    // v_0 + K (x_k - z_0)
  std::array<bool, 2> branch_feasible{false, false};
  std::array<double, 2> branch_objective{kInf, kInf};
  int step = 0;
};

// Solves both xi branches, applies the cheaper feasible one (ties go to
// xi = 0), advances the controller. Throws InfeasibleError("recursive
// feasibility violated") if neither branch is feasible.
MpcSolution solve_mpc_step(ControllerState& state, const Vector& x_k,
                           const QpSolver& solver = ActiveSetQpSolver());

struct MpcCandidate {
  Matrix v_bar;
  Matrix z_bar;
};

// Shifted candidate for the next step: {v_1, ..., v_{N-1}, K z_N} with xi = 1,
// giving {z_1, ..., z_N, A_K z_N}.
MpcCandidate candidate_shift(const MpcSolution& prev, const SynthesisContext& ctx);

// Stacks an N x m plan row by row.
Vector flatten_plan(const Matrix& v_bar);

// Cost sum |v_i - K z_i|_S^2 of a plan started at z0.
double plan_cost(const ControllerState& state, const Vector& z0, const Matrix& v_bar);

// Largest violation of the QP rows by a plan.
double plan_violation(const MpcQp& qp, const Matrix& v_bar);

}  // namespace dynsmpc
