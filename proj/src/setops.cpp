#include "dynsmpc/setops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

#include "dynsmpc/errors.hpp"

namespace dynsmpc {

namespace {

constexpr int kMaxVertexGenerators = 16;

Matrix unit_ball_template(int d, int g) {
  if (d == 2 && g > 2) {
    Matrix T(2, g);
    const double len = std::tan(std::numbers::pi / (2.0 * g));
    for (int k = 0; k < g; ++k) {
      const double angle = k * std::numbers::pi / g;
      T(0, k) = len * std::cos(angle);
      T(1, k) = len * std::sin(angle);
    }
    return T;
  }
  return Matrix::Identity(d, d);
}

Matrix nonzero_generators(const Zonotope& Z) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < Z.generators.cols(); ++j) {
    if (Z.generators.col(j).norm() > 0.0) keep.push_back(j);
  }
  Matrix G(Z.dim(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) G.col(j) = Z.generators.col(keep[j]);
  return G;
}

void push_unique(std::vector<Vector>& points, const Vector& p, double tol) {
  for (const auto& q : points) {
    if ((q - p).cwiseAbs().maxCoeff() <= tol) return;
  }
  points.push_back(p);
}

// 2D zonotope boundary walk over generators sorted by angle in [0, pi).
VertexSet vertices_2d(const Vector& c, const Matrix& G) {
  std::vector<Vector> gens;
  for (Eigen::Index j = 0; j < G.cols(); ++j) {
    Vector g = G.col(j);
    double angle = std::atan2(g(1), g(0));
    if (angle < 0.0) {
      g = -g;
      angle += std::numbers::pi;
    }
    if (angle >= std::numbers::pi) {
      g = -g;
      angle -= std::numbers::pi;
    }
    gens.push_back(g);
  }
  std::sort(gens.begin(), gens.end(), [](const Vector& a, const Vector& b) {
    return std::atan2(a(1), a(0)) < std::atan2(b(1), b(0));
  });
  // Merge parallel generators.
  std::vector<Vector> merged;
  for (const auto& g : gens) {
    if (!merged.empty()) {
      const Vector& last = merged.back();
      const double cross = last(0) * g(1) - last(1) * g(0);
      if (std::abs(cross) <= 1e-12 * last.norm() * g.norm()) {
        merged.back() += g;
        continue;
      }
    }
    merged.push_back(g);
  }
  VertexSet out;
  Vector p = c;
  for (const auto& g : merged) p -= g;
  for (const auto& g : merged) {
    out.vertices.push_back(p);
    p += 2.0 * g;
  }
  for (const auto& g : merged) {
    out.vertices.push_back(p);
    p -= 2.0 * g;
  }
  return out;
}

}  // namespace

Zonotope ellipsoid_to_zonotope(const Ellipsoid& E, int generators) {
  const int d = E.dim();
  if (E.shape.cols() != d || E.center.size() != d) {
    throw std::invalid_argument("ellipsoid_to_zonotope: inconsistent ellipsoid");
  }
  if (generators < d) {
    throw std::invalid_argument(
        fmt::format("insufficient generators: {} < dimension {}", generators, d));
  }
  Zonotope Z;
  Z.center = E.center;
  Z.generators = symmetric_sqrt(E.shape) * unit_ball_template(d, generators);
  return Z;
}

double zonotope_support(const Zonotope& Z, const Vector& direction) {
  double h = Z.center.size() ? direction.dot(Z.center) : 0.0;
  if (Z.generators.cols() > 0) h += (direction.transpose() * Z.generators).cwiseAbs().sum();
  return h;
}

VertexSet zonotope_vertices(const Zonotope& Z) {
  if (Z.order() > kMaxVertexGenerators) {
    throw std::invalid_argument(fmt::format("generator budget exceeded: {} > {}", Z.order(),
                                            kMaxVertexGenerators));
  }
  const Matrix G = nonzero_generators(Z);
  const int d = Z.dim();
  const Vector c = Z.center.size() ? Z.center : Vector::Zero(d);
  if (G.cols() == 0) return VertexSet{{c}};
  if (d == 2) return vertices_2d(c, G);

  // Sign pattern sigma gives a vertex iff some direction a has
  // sigma_j * a^T g_j >= 1 for every generator.
  const int g = static_cast<int>(G.cols());
  SimplexSolver solver;
  std::vector<Vector> points;
  for (unsigned mask = 0; mask < (1u << g); ++mask) {
    Vector sigma(g);
    for (int j = 0; j < g; ++j) sigma(j) = (mask >> j) & 1u ? 1.0 : -1.0;
    LinearProgram lp = LinearProgram::free(d);
    lp.A_in = -(sigma.asDiagonal() * G.transpose());
    lp.b_in = -Vector::Ones(g);
    if (solver.solve(lp).status == SolveStatus::kOptimal) push_unique(points, c + G * sigma, 1e-9);
  }
  return VertexSet{points};
}

Polytope zonotope_to_halfspace(const Zonotope& Z) {
  const int d = Z.dim();
  const Matrix G = nonzero_generators(Z);
  if (G.cols() == 0 || Eigen::FullPivLU<Matrix>(G).rank() < d) {
    throw std::invalid_argument("zonotope not full-dimensional");
  }
  std::vector<Vector> normals;
  auto add_normal = [&](Vector nrm) {
    nrm.normalize();
    for (const auto& q : normals) {
      if ((q - nrm).norm() < 1e-9 || (q + nrm).norm() < 1e-9) return;
    }
    normals.push_back(nrm);
  };
  if (d == 1) {
    add_normal(Vector::Ones(1));
  } else {
    // Facet normals are orthogonal to (d-1)-subsets of generators.
    const int g = static_cast<int>(G.cols());
    std::vector<int> idx(d - 1);
    for (int i = 0; i < d - 1; ++i) idx[i] = i;
    while (true) {
      Matrix S(d - 1, d);
      for (int i = 0; i < d - 1; ++i) S.row(i) = G.col(idx[i]).transpose();
      Eigen::FullPivLU<Matrix> lu(S);
      if (lu.rank() == d - 1) add_normal(lu.kernel().col(0));
      int i = d - 2;
      while (i >= 0 && idx[i] == g - (d - 1) + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int k = i + 1; k < d - 1; ++k) idx[k] = idx[k - 1] + 1;
    }
  }
  Polytope P;
  P.A.resize(2 * static_cast<Eigen::Index>(normals.size()), d);
  P.b.resize(P.A.rows());
  for (std::size_t k = 0; k < normals.size(); ++k) {
    P.A.row(2 * k) = normals[k].transpose();
    P.A.row(2 * k + 1) = -normals[k].transpose();
    P.b(2 * k) = zonotope_support(Z, normals[k]);
    P.b(2 * k + 1) = zonotope_support(Z, -normals[k]);
  }
  return P;
}

Vector support_margins(const Polytope& P, const Zonotope& Z) {
  if (P.dim() != Z.dim()) throw std::invalid_argument("support_margins: dimension mismatch");
  Vector h(P.rows());
  for (int i = 0; i < P.rows(); ++i) h(i) = zonotope_support(Z, P.A.row(i).transpose());
  return h;
}

Polytope tighten(const Polytope& P, const Zonotope& Z, double scale) {
  Polytope out = P;
  out.b -= scale * support_margins(P, Z);
  return out;
}

bool contains(const Polytope& P, const Vector& x, double tol) {
  if (P.rows() == 0) return true;
  return (P.A * x - P.b).maxCoeff() <= tol;
}

std::optional<double> maximize(const Polytope& P, const Vector& c, const LpSolver& solver) {
  LinearProgram lp = LinearProgram::free(P.dim());
  lp.cost = -c;
  lp.A_in = P.A;
  lp.b_in = P.b;
  const LpResult res = solver.solve(lp);
  switch (res.status) {
    case SolveStatus::kOptimal:
      return -res.objective;
    case SolveStatus::kUnbounded:
      return kInf;
    case SolveStatus::kInfeasible:
      return std::nullopt;
    case SolveStatus::kNumericalFailure:
      break;
  }
  throw SolveError("LP failure while maximizing over a polytope");
}

bool is_empty(const Polytope& P, const LpSolver& solver) {
  return !maximize(P, Vector::Zero(P.dim()), solver).has_value();
}

Polytope remove_redundant_rows(const Polytope& P, const LpSolver& solver, double tol) {
  std::vector<int> keep;
  for (int i = 0; i < P.rows(); ++i) keep.push_back(i);
  for (int i = P.rows() - 1; i >= 0 && keep.size() > 1; --i) {
    Polytope others;
    others.A.resize(static_cast<Eigen::Index>(keep.size()) - 1, P.dim());
    others.b.resize(others.A.rows());
    int r = 0;
    for (int k : keep) {
      if (k == i) continue;
      others.A.row(r) = P.A.row(k);
      others.b(r) = P.b(k);
      ++r;
    }
    const auto mx = maximize(others, P.A.row(i).transpose(), solver);
    if (mx && *mx <= P.b(i) + tol * std::max(1.0, std::abs(P.b(i)))) {
      keep.erase(std::find(keep.begin(), keep.end(), i));
    }
  }
  Polytope out;
  out.A.resize(static_cast<Eigen::Index>(keep.size()), P.dim());
  out.b.resize(out.A.rows());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.A.row(r) = P.A.row(keep[r]);
    out.b(r) = P.b(keep[r]);
  }
  return out;
}

VertexSet polytope_vertices(const Polytope& P, double tol) {
  const int d = P.dim();
  const int q = P.rows();
  std::vector<Vector> points;
  if (q < d) return {};
  std::vector<int> idx(d);
  for (int i = 0; i < d; ++i) idx[i] = i;
  while (true) {
    Matrix S(d, d);
    Vector rhs(d);
    for (int i = 0; i < d; ++i) {
      S.row(i) = P.A.row(idx[i]);
      rhs(i) = P.b(idx[i]);
    }
    Eigen::FullPivLU<Matrix> lu(S);
    if (lu.rank() == d) {
      const Vector x = lu.solve(rhs);
      if (contains(P, x, tol * std::max(1.0, P.b.cwiseAbs().maxCoeff()))) push_unique(points, x, 1e-9);
    }
    int i = d - 1;
    while (i >= 0 && idx[i] == q - d + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int k = i + 1; k < d; ++k) idx[k] = idx[k - 1] + 1;
  }
  if (d == 2 && points.size() > 2) {
    Vector centroid = Vector::Zero(2);
    for (const auto& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());
    std::sort(points.begin(), points.end(), [&](const Vector& a, const Vector& b) {
      return std::atan2(a(1) - centroid(1), a(0) - centroid(0)) <
             std::atan2(b(1) - centroid(1), b(0) - centroid(0));
    });
  }
  return VertexSet{points};
}

Polytope mpi_terminal_set(const Matrix& AK, const Matrix& K, const Polytope& state_set,
                          const std::optional<Polytope>& input_set, int max_iter) {
  const int n = static_cast<int>(AK.rows());
  if (AK.cols() != n || state_set.dim() != n) {
    throw std::invalid_argument("mpi_terminal_set: dimension mismatch");
  }
  SimplexSolver solver;

  Polytope base = state_set;
  if (input_set) {
    if (K.cols() != n || K.rows() != input_set->dim()) {
      throw std::invalid_argument("mpi_terminal_set: K dimension mismatch");
    }
    base.A.conservativeResize(state_set.rows() + input_set->rows(), n);
    base.b.conservativeResize(base.A.rows());
    base.A.bottomRows(input_set->rows()) = input_set->A * K;
    base.b.tail(input_set->rows()) = input_set->b;
  }
  if (is_empty(base, solver)) throw InfeasibleError("terminal set empty");
  base = remove_redundant_rows(base, solver);

  const double tol = 1e-9;
  Polytope omega = base;
  Matrix power = AK;
  for (int t = 0; t < max_iter; ++t) {
    const Matrix candidates = base.A * power;
    bool added = false;
    for (Eigen::Index r = 0; r < candidates.rows(); ++r) {
      const auto mx = maximize(omega, candidates.row(r).transpose(), solver);
      if (!mx) throw InfeasibleError("terminal set empty");
      if (*mx > base.b(r) + tol * std::max(1.0, std::abs(base.b(r)))) {
        omega.A.conservativeResize(omega.rows() + 1, n);
        omega.b.conservativeResize(omega.rows());
        omega.A.row(omega.rows() - 1) = candidates.row(r);
        omega.b(omega.rows() - 1) = base.b(r);
        added = true;
      }
    }
    if (!added) return remove_redundant_rows(omega, solver);
    omega = remove_redundant_rows(omega, solver);
    power = AK * power;
  }
  throw SolveError(fmt::format("MPI iteration did not converge in {} iterations", max_iter));
}

}  // namespace dynsmpc
