#pragma once

#include <optional>

#include "dynsmpc/linalg.hpp"
#include "dynsmpc/model.hpp"
#include "dynsmpc/reachability.hpp"
#include "dynsmpc/sets.hpp"

namespace dynsmpc {

struct GainPack {
  Matrix K;  // u = K x, K = -(R + B^T P B)^{-1} B^T P A
  Matrix P;  // stabilizing DARE solution
  Matrix S;  // R + B^T P B
  int iterations = 0;
};

struct DareOptions {
  double tolerance = 1e-12;  // relative change in P
  int max_iterations = 10000;
};

// Fixed-point Riccati iteration from P0 = Q. Throws SolveError("DARE failed")
// on divergence, non-convergence, or a non-stabilizing result.
GainPack solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                    const DareOptions& options = {});

// |A^T P A + A^T P B K + Q - P|_F
double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const GainPack& gains);

struct TighteningOptions {
  // Zonotope generator count; nullopt selects the box template (g = d).
  std::optional<int> generators;
  // Probability-scale family; nullopt follows the noise family.
  std::optional<NoiseFamily> scale_family;
  int mpi_max_iterations = 200;
  DareOptions dare;
};

struct SynthesisContext {
  GainPack gains;
  Matrix AK;
  PrsPair prs;
  NoiseFamily scale_family = NoiseFamily::kGaussian;
  Zonotope zono_x;
  std::optional<Zonotope> zono_u;
  Vector margins_x;                  // h_x: support of zono_x along the rows of X
  std::optional<Vector> margins_u;   // h_u
  Polytope tightened_state;          // Z = X minus zono_x
  std::optional<Polytope> tightened_input;  // V = U minus zono_u
  Polytope terminal_set;             // Z_F
};

// Gains, PRS, zonotopes, fully tightened sets and terminal set for one
// instance. Throws std::invalid_argument for invalid instances and
// InfeasibleError("terminal set empty") when even the fully tightened sets
// admit no invariant set.
SynthesisContext build_context(const ProblemInstance& instance,
                               const TighteningOptions& options = {});

// Same, at an overridden state (and input) probability level.
SynthesisContext build_context_at(const ProblemInstance& instance, double p_bar_x,
                                  std::optional<double> p_bar_u,
                                  const TighteningOptions& options = {});

}  // namespace dynsmpc
