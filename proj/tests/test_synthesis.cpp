#include <gtest/gtest.h>

#include <cmath>

#include "dynsmpc/errors.hpp"
#include "dynsmpc/setops.hpp"
#include "dynsmpc/synthesis.hpp"
#include "test_util.hpp"

namespace dynsmpc {
namespace {

using testing::box2;
using testing::mat;

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

TEST(Dare, NoDynamics) {
  const GainPack g = solve_dare(scalar(0), scalar(1), scalar(1), scalar(1));
  EXPECT_NEAR(g.P(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(g.K(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(g.S(0, 0), 2.0, 1e-12);
}

// Scalar DARE with A = B = Q = R = 1 reduces to P^2 - P - 1 = 0.
TEST(Dare, ScalarGoldenRatio) {
  const GainPack g = solve_dare(scalar(1), scalar(1), scalar(1), scalar(1));
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  EXPECT_NEAR(g.P(0, 0), phi, 1e-9);
  EXPECT_NEAR(g.K(0, 0), -phi / (1.0 + phi), 1e-9);
}

TEST(Dare, CaseStudyResidualAndStability) {
  const ProblemInstance inst = dc_dc_converter_instance();
  const GainPack g = solve_dare(inst.system.A, inst.system.B, inst.Q, inst.R);
  EXPECT_LE(dare_residual(inst.system.A, inst.system.B, inst.Q, g), 1e-9 * g.P.norm());
  EXPECT_LT(spectral_radius(inst.system.A + inst.system.B * g.K), 1.0);
  EXPECT_LE(g.iterations, 500);
  EXPECT_TRUE(is_positive_definite(g.P));
  EXPECT_LE((g.S - (inst.R + inst.system.B.transpose() * g.P * inst.system.B)).norm(), 1e-12);
}

TEST(Dare, GainReproducesItself) {
  const ProblemInstance inst = dc_dc_converter_instance();
  const Matrix& A = inst.system.A;
  const Matrix& B = inst.system.B;
  const GainPack g = solve_dare(A, B, inst.Q, inst.R);
  const Matrix K = -(inst.R + B.transpose() * g.P * B).ldlt().solve(B.transpose() * g.P * A);
  EXPECT_LE((K - g.K).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Dare, UnstabilizablePairFails) {
  const Matrix A = mat({{2, 0}, {0, 0.5}});
  const Matrix B = mat({{0}, {1}});
  try {
    solve_dare(A, B, Matrix::Identity(2, 2), scalar(1));
    FAIL();
  } catch (const SolveError& e) {
    EXPECT_NE(std::string(e.what()).find("DARE failed"), std::string::npos);
  }
}

TEST(BuildContext, CaseStudyInclusions) {
  const ProblemInstance inst = dc_dc_converter_instance();
  for (std::optional<int> g : {std::optional<int>{}, std::optional<int>{8}}) {
    TighteningOptions opt;
    opt.generators = g;
    const SynthesisContext ctx = build_context(inst, opt);
    EXPECT_TRUE(contains(ctx.terminal_set, Vector::Zero(2)));
    EXPECT_LE((ctx.AK - (inst.system.A + inst.system.B * ctx.gains.K)).norm(), 1e-15);
    // Z is X shifted inward row by row.
    EXPECT_TRUE((ctx.tightened_state.b.array() <= inst.constraints.state_set.b.array()).all());
    EXPECT_TRUE((ctx.margins_x.array() > 0).all());
    for (const auto& v : polytope_vertices(ctx.terminal_set).vertices) {
      EXPECT_TRUE(contains(ctx.tightened_state, v, 1e-9));
    }
    EXPECT_FALSE(ctx.zono_u.has_value());
    EXPECT_FALSE(ctx.tightened_input.has_value());
  }
}

TEST(BuildContext, InputConstrainedTerminalSetMapsIntoV) {
  ProblemInstance inst = dc_dc_converter_instance();
  inst.constraints.input_set = Polytope::box(Vector::Constant(1, -0.5), Vector::Constant(1, 0.5));
  inst.constraints.p_bar_u = 0.6;
  const SynthesisContext ctx = build_context(inst);
  ASSERT_TRUE(ctx.tightened_input.has_value());
  EXPECT_TRUE((ctx.tightened_input->b.array() <= 0.5).all());
  for (const auto& v : polytope_vertices(ctx.terminal_set).vertices) {
    EXPECT_TRUE(contains(*ctx.tightened_input, ctx.gains.K * v, 1e-9));
  }
}

// The PRS radius exceeds the box half-width, so the tightened set is empty.
TEST(BuildContext, TinyBoxHasEmptyTerminalSet) {
  ProblemInstance inst = dc_dc_converter_instance();
  inst.constraints.state_set = box2(-0.01, 0.01);
  inst.noise.covariance = Matrix::Identity(2, 2);
  inst.x0 = Vector::Zero(2);
  try {
    build_context(inst);
    FAIL();
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("terminal set empty"), std::string::npos);
  }
}

TEST(BuildContext, ZeroProbabilityKeepsX) {
  ProblemInstance inst = dc_dc_converter_instance();
  inst.constraints.p_bar_x = 0.0;
  const SynthesisContext ctx = build_context(inst);
  EXPECT_LE(ctx.zono_x.generators.norm(), 1e-12);
  EXPECT_LE((ctx.tightened_state.b - inst.constraints.state_set.b).norm(), 1e-12);
  const Polytope mpi = mpi_terminal_set(ctx.AK, ctx.gains.K, inst.constraints.state_set, std::nullopt);
  const auto a = polytope_vertices(mpi).vertices;
  const auto b = polytope_vertices(ctx.terminal_set).vertices;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE((a[i] - b[i]).norm(), 1e-9);
}

TEST(BuildContext, RejectsInvalidInstance) {
  ProblemInstance inst = dc_dc_converter_instance();
  inst.horizon = 0;
  EXPECT_THROW(build_context(inst), std::invalid_argument);
}

TEST(BuildContext, LevelOverrideShrinksMargins) {
  const ProblemInstance inst = dc_dc_converter_instance();
  const SynthesisContext lo = build_context_at(inst, 0.3, std::nullopt);
  const SynthesisContext hi = build_context_at(inst, 0.6, std::nullopt);
  EXPECT_TRUE((lo.margins_x.array() < hi.margins_x.array()).all());
}

}  // namespace
}  // namespace dynsmpc
