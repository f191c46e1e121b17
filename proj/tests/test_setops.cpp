#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dynsmpc/errors.hpp"
#include "dynsmpc/setops.hpp"
#include "dynsmpc/synthesis.hpp"
#include "test_util.hpp"

namespace dynsmpc {
namespace {

using testing::box2;
using testing::mat;
using testing::vec;

constexpr double kPi = std::numbers::pi;

Zonotope zono(const Matrix& G) { return Zonotope{Vector::Zero(G.rows()), G}; }

Vector direction(double angle) { return vec({std::cos(angle), std::sin(angle)}); }

// All points c + G sigma for sigma in {-1, 1}^g.
std::vector<Vector> sign_points(const Zonotope& Z) {
  std::vector<Vector> out;
  const int g = Z.order();
  for (unsigned mask = 0; mask < (1u << g); ++mask) {
    Vector p = Z.center;
    for (int j = 0; j < g; ++j) p += ((mask >> j) & 1u ? 1.0 : -1.0) * Z.generators.col(j);
    out.push_back(p);
  }
  return out;
}

// Distance from x to the boundary of {A x <= b}, rows of A normalized.
double boundary_distance(const Polytope& P, const Vector& x) {
  double d = kInf;
  for (int i = 0; i < P.rows(); ++i) {
    const double nrm = P.A.row(i).norm();
    d = std::min(d, std::abs(P.A.row(i).dot(x) - P.b(i)) / nrm);
  }
  return d;
}

Matrix random_zonotope_generators(std::mt19937_64& rng, int g) {
  std::normal_distribution<double> nd(0.0, 0.4);
  Matrix G(2, g);
  for (int j = 0; j < g; ++j) G.col(j) = vec({nd(rng), nd(rng)});
  return G;
}

TEST(EllipsoidToZonotope, UnitDiskSquare) {
  const Zonotope Z = ellipsoid_to_zonotope({Matrix::Identity(2, 2), Vector::Zero(2)}, 2);
  EXPECT_LE((Z.generators - Matrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(EllipsoidToZonotope, UnitDiskHexagon) {
  const Zonotope Z = ellipsoid_to_zonotope({Matrix::Identity(2, 2), Vector::Zero(2)}, 3);
  ASSERT_EQ(Z.order(), 3);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(Z.generators.col(k).norm(), std::tan(kPi / 6), 1e-12);
    EXPECT_NEAR(std::atan2(Z.generators(1, k), Z.generators(0, k)), k * kPi / 3, 1e-12);
  }
  for (int i = 0; i < 360; ++i) EXPECT_GE(zonotope_support(Z, direction(i * kPi / 180)), 1.0 - 1e-12);
}

TEST(EllipsoidToZonotope, AxisAlignedScaling) {
  const Zonotope Z = ellipsoid_to_zonotope({mat({{4, 0}, {0, 1}}), Vector::Zero(2)}, 2);
  EXPECT_LE((Z.generators - mat({{2, 0}, {0, 1}})).norm(), 1e-14);
}

TEST(EllipsoidToZonotope, InsufficientGenerators) {
  try {
    ellipsoid_to_zonotope({Matrix::Identity(3, 3), Vector::Zero(3)}, 2);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient generators"), std::string::npos);
  }
}

// Support of E in direction a is sqrt(a^T E a).
TEST(EllipsoidToZonotope, ContainsEllipsoidInAllDirections) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    Matrix L = mat({{nd(rng), nd(rng)}, {nd(rng), nd(rng)}});
    const Matrix E = L * L.transpose() + 0.05 * Matrix::Identity(2, 2);
    const int g = 2 + trial % 7;
    const Zonotope Z = ellipsoid_to_zonotope({E, Vector::Zero(2)}, g);
    for (int i = 0; i < 360; ++i) {
      const Vector a = direction(i * kPi / 180);
      EXPECT_LE(std::sqrt(a.dot(E * a)), zonotope_support(Z, a) + 1e-12);
    }
  }
}

TEST(ZonotopeSupport, Examples) {
  const Zonotope Z = zono(Matrix::Identity(2, 2));
  EXPECT_DOUBLE_EQ(zonotope_support(Z, vec({1, 1})), 2.0);
  EXPECT_DOUBLE_EQ(zonotope_support(Z, vec({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(zonotope_support(Z, vec({0, 0})), 0.0);
  EXPECT_DOUBLE_EQ(zonotope_support(Z, vec({3, 0})), 3.0 * zonotope_support(Z, vec({1, 0})));
}

TEST(ZonotopeVertices, SquareSegmentAndCube) {
  const VertexSet sq = zonotope_vertices(zono(Matrix::Identity(2, 2)));
  ASSERT_EQ(sq.size(), 4u);
  for (const auto& v : sq.vertices) {
    EXPECT_NEAR(std::abs(v(0)), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(v(1)), 1.0, 1e-15);
  }
  const VertexSet seg = zonotope_vertices(zono(Matrix::Ones(1, 1)));
  ASSERT_EQ(seg.size(), 2u);
  EXPECT_NEAR(std::abs(seg.vertices[0](0)), 1.0, 1e-15);
  EXPECT_NEAR(seg.vertices[0](0) + seg.vertices[1](0), 0.0, 1e-15);

  Matrix G(3, 4);
  G << Matrix::Identity(3, 3), vec({0.1, 0.1, 0.1});
  EXPECT_EQ(zonotope_vertices(zono(Matrix::Identity(3, 3))).size(), 8u);
  EXPECT_EQ(zonotope_vertices(zono(G)).size(), 14u);  // 2 * C(4, 2) for generic generators
}

TEST(ZonotopeVertices, HexagonVerticesAreExtreme) {
  const Zonotope Z = ellipsoid_to_zonotope({Matrix::Identity(2, 2), Vector::Zero(2)}, 3);
  const VertexSet V = zonotope_vertices(Z);
  ASSERT_EQ(V.size(), 6u);
  // Circumradius of a regular hexagon with inradius 1.
  for (const auto& v : V.vertices) EXPECT_NEAR(v.norm(), 2.0 * std::tan(kPi / 6), 1e-12);
  // Each vertex is the unique maximizer in some sampled direction.
  std::vector<int> hits(V.size(), 0);
  for (int i = 0; i < 360; ++i) {
    const Vector a = direction((i + 0.5) * kPi / 180);
    std::size_t best = 0;
    for (std::size_t k = 1; k < V.size(); ++k) {
      if (a.dot(V.vertices[k]) > a.dot(V.vertices[best])) best = k;
    }
    EXPECT_NEAR(a.dot(V.vertices[best]), zonotope_support(Z, a), 1e-12);
    ++hits[best];
  }
  for (int h : hits) EXPECT_GT(h, 0);
}

TEST(ZonotopeVertices, GeneratorBudget) {
  try {
    zonotope_vertices(zono(Matrix::Ones(2, 17)));
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("generator budget exceeded"), std::string::npos);
  }
}

TEST(ZonotopeToHalfspace, Square) {
  const Polytope P = zonotope_to_halfspace(zono(Matrix::Identity(2, 2)));
  ASSERT_EQ(P.rows(), 4);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(P.A.row(i).cwiseAbs().maxCoeff(), 1.0, 1e-12);
    EXPECT_NEAR(P.b(i), 1.0, 1e-12);
  }
}

TEST(ZonotopeToHalfspace, HexagonTangentToDisk) {
  const Zonotope Z = ellipsoid_to_zonotope({Matrix::Identity(2, 2), Vector::Zero(2)}, 3);
  const Polytope P = zonotope_to_halfspace(Z);
  ASSERT_EQ(P.rows(), 6);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(P.b(i) / P.A.row(i).norm(), 1.0, 1e-9);
}

TEST(ZonotopeToHalfspace, ParallelogramMatchesHull) {
  const Zonotope Z = zono(mat({{1, 1}, {0, 1}}));
  const Polytope P = zonotope_to_halfspace(Z);
  ASSERT_EQ(P.rows(), 4);
  // Hull of the four sign points: every point satisfies all rows, each row tight at two.
  const auto pts = sign_points(Z);
  for (int i = 0; i < P.rows(); ++i) {
    int tight = 0;
    for (const auto& p : pts) {
      EXPECT_LE(P.A.row(i).dot(p), P.b(i) + 1e-12);
      tight += std::abs(P.A.row(i).dot(p) - P.b(i)) < 1e-12;
    }
    EXPECT_EQ(tight, 2);
    const Vector n = P.A.row(i).normalized().transpose();
    const bool horizontal = std::abs(std::abs(n(1)) - 1.0) < 1e-12;
    const bool diagonal = std::abs(std::abs(n(0)) - std::sqrt(0.5)) < 1e-12 && n(0) * n(1) < 0;
    EXPECT_TRUE(horizontal || diagonal) << n.transpose();
  }
}

TEST(ZonotopeToHalfspace, FlatRejected) {
  EXPECT_THROW(zonotope_to_halfspace(zono(mat({{1, 2}, {1, 2}}))), std::invalid_argument);
}

TEST(ZonotopeToHalfspace, AgreesWithVertices) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Zonotope Z = zono(random_zonotope_generators(rng, 2 + trial % 5));
    const Polytope P = zonotope_to_halfspace(Z);
    for (const auto& v : zonotope_vertices(Z).vertices) {
      int tight = 0;
      for (int i = 0; i < P.rows(); ++i) {
        EXPECT_LE(P.A.row(i).dot(v), P.b(i) + 1e-9);
        tight += std::abs(P.A.row(i).dot(v) - P.b(i)) <= 1e-9;
      }
      EXPECT_GE(tight, 2);
    }
  }
}

TEST(Tighten, BoxMinusBox) {
  const Polytope T = tighten(box2(-2, 2), zono(0.5 * Matrix::Identity(2, 2)), 1.0);
  EXPECT_LE((T.b - Vector::Constant(4, 1.5)).norm(), 1e-15);
  const Polytope same = tighten(box2(-2, 2), zono(0.5 * Matrix::Identity(2, 2)), 0.0);
  EXPECT_EQ(same.b, box2(-2, 2).b);
}

// Support-function tightening against intersecting P - v over all vertices v:
// for row i the intersection's bound is b_i - max_v a_i^T v.
TEST(Tighten, SupportEqualsVertexIntersection) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const Zonotope Z = zono(random_zonotope_generators(rng, 1 + trial % 6));
    const Polytope P = box2(-2, 2);
    const Polytope T = tighten(P, Z, 1.0);
    for (int i = 0; i < P.rows(); ++i) {
      double worst = -kInf;
      for (const auto& v : sign_points(Z)) worst = std::max(worst, P.A.row(i).dot(v));
      EXPECT_NEAR(T.b(i), P.b(i) - worst, 1e-9);
    }
  }
}

TEST(Tighten, HexagonGridOracle) {
  const Zonotope Z = ellipsoid_to_zonotope({Matrix::Identity(2, 2), Vector::Zero(2)}, 3);
  const Polytope P = box2(-2, 2);
  const Polytope T = tighten(P, Z, 1.0);
  const auto pts = sign_points(Z);
  const int cells = 400;
  const double h = 4.0 / cells;
  int mismatches = 0;
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      const Vector x = vec({-2 + (i + 0.5) * h, -2 + (j + 0.5) * h});
      bool oracle = true;
      for (const auto& z : pts) oracle = oracle && contains(P, x + z, 0.0);
      if (oracle != contains(T, x, 0.0)) {
        ++mismatches;
        EXPECT_LE(boundary_distance(T, x), h);
      }
    }
  }
  EXPECT_LT(mismatches, 4 * cells);
}

TEST(Tighten, MonotoneInScaleAndReconstructs) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Zonotope Z = zono(random_zonotope_generators(rng, 4));
  const Polytope P = box2(-2, 2);
  for (double s1 = 0.0; s1 <= 1.0; s1 += 0.25) {
    for (double s2 = s1; s2 <= 1.0; s2 += 0.25) {
      const Polytope a = tighten(P, Z, s1);
      const Polytope b = tighten(P, Z, s2);
      EXPECT_TRUE((b.b.array() <= a.b.array() + 1e-15).all());
    }
  }
  const Polytope T = tighten(P, Z, 1.0);
  const VertexSet TV = polytope_vertices(T);
  ASSERT_GE(TV.size(), 3u);
  for (int trial = 0; trial < 500; ++trial) {
    // A point of T (convex combination of its vertices) plus a point of Z.
    Vector w(TV.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = std::abs(unit(rng));
    w /= w.sum();
    Vector p = Vector::Zero(2);
    for (std::size_t k = 0; k < TV.size(); ++k) p += w(k) * TV.vertices[k];
    Vector sigma(Z.order());
    for (Eigen::Index j = 0; j < sigma.size(); ++j) sigma(j) = unit(rng);
    EXPECT_TRUE(contains(P, p + Z.generators * sigma));
  }
}

TEST(Contains, ToleranceContract) {
  const Polytope P = box2(-2, 2);
  EXPECT_TRUE(contains(P, vec({0, 0})));
  EXPECT_FALSE(contains(P, vec({2 + 1e-3, 0})));
  EXPECT_TRUE(contains(P, vec({2, 0})));
}

TEST(PolytopeVertices, BoxCorners) {
  const VertexSet V = polytope_vertices(box2(-1, 3));
  ASSERT_EQ(V.size(), 4u);
  for (const auto& v : V.vertices) {
    EXPECT_TRUE(std::abs(v(0) + 1) < 1e-12 || std::abs(v(0) - 3) < 1e-12);
    EXPECT_TRUE(std::abs(v(1) + 1) < 1e-12 || std::abs(v(1) - 3) < 1e-12);
  }
}

TEST(RedundantRows, DropsImpliedRows) {
  Polytope P = box2(-1, 1);
  P.A.conservativeResize(6, 2);
  P.b.conservativeResize(6);
  P.A.row(4) = vec({1, 1}).transpose();
  P.b(4) = 5;
  P.A.row(5) = vec({1, 0}).transpose();
  P.b(5) = 2;
  EXPECT_EQ(remove_redundant_rows(P, SimplexSolver()).rows(), 4);
}

TEST(Mpi, ContractiveBoxIsInvariant) {
  const Polytope Zf = mpi_terminal_set(0.5 * Matrix::Identity(2, 2), Matrix::Zero(1, 2), box2(-1, 1),
                                       std::nullopt);
  ASSERT_EQ(Zf.rows(), 4);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(Zf.b(i) / Zf.A.row(i).norm(), 1.0, 1e-12);
}

// Grid oracle: z is in the MPI set iff A_K^t z stays in the box for all t.
TEST(Mpi, RotationGridOracle) {
  const double c = 0.9 * std::cos(kPi / 4);
  const double s = 0.9 * std::sin(kPi / 4);
  const Matrix AK = mat({{c, -s}, {s, c}});
  const Polytope box = box2(-1, 1);
  const Polytope Zf = mpi_terminal_set(AK, Matrix::Zero(1, 2), box, std::nullopt);
  EXPECT_GT(Zf.rows(), 4);
  const int cells = 200;
  const double h = 2.0 / cells;
  int mismatches = 0;
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      Vector z = vec({-1 + (i + 0.5) * h, -1 + (j + 0.5) * h});
      const Vector z0 = z;
      bool oracle = true;
      for (int t = 0; t < 300 && oracle; ++t) {
        oracle = contains(box, z, 0.0);
        z = AK * z;
      }
      if (oracle != contains(Zf, z0, 0.0)) {
        ++mismatches;
        EXPECT_LE(boundary_distance(Zf, z0), h);
      }
    }
  }
  EXPECT_LT(mismatches, 4 * cells);
}

TEST(Mpi, CaseStudyTerminalSetInvariantAndInsideTightened) {
  const SynthesisContext ctx = build_context(dc_dc_converter_instance());
  const Polytope& Zf = ctx.terminal_set;
  EXPECT_TRUE(contains(Zf, Vector::Zero(2)));
  const VertexSet V = polytope_vertices(Zf);
  ASSERT_GE(V.size(), 3u);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vector w(V.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = unit(rng);
    w /= w.sum();
    Vector z = Vector::Zero(2);
    for (std::size_t k = 0; k < V.size(); ++k) z += w(k) * V.vertices[k];
    EXPECT_TRUE(contains(Zf, ctx.AK * z, 1e-9));
    EXPECT_TRUE(contains(ctx.tightened_state, z, 1e-9));
  }
  for (const auto& v : V.vertices) EXPECT_TRUE(contains(Zf, ctx.AK * v, 1e-9));
}

TEST(Mpi, EmptyStartingSet) {
  Polytope empty = box2(-1, 1);
  empty.b(0) = -2;  // x1 <= -2 and x1 >= -1
  try {
    mpi_terminal_set(0.5 * Matrix::Identity(2, 2), Matrix::Zero(1, 2), empty, std::nullopt);
    FAIL();
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("terminal set empty"), std::string::npos);
  }
}

TEST(Mpi, IterationBudget) {
  const Matrix AK = mat({{0.999, 0.04}, {-0.04, 0.999}});
  EXPECT_THROW(mpi_terminal_set(AK, Matrix::Zero(1, 2), box2(-1, 1), std::nullopt, 2), SolveError);
}

}  // namespace
}  // namespace dynsmpc
