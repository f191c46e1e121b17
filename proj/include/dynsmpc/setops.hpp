#pragma once

#include <optional>

#include "dynsmpc/linalg.hpp"
#include "dynsmpc/optim.hpp"
#include "dynsmpc/sets.hpp"

namespace dynsmpc {

// Outer zonotope of an ellipsoid: Z = c + L * Z_ball with L the symmetric
// square root of the shape and Z_ball a unit-ball template. With g == d the
// template is the unit box; in 2D with g > d it is the circumscribed regular
// 2g-gon (generators at angles k*pi/g, length tan(pi/(2g))). In d >= 3 only
// the box is available and g is ignored. Throws for g < d.
Zonotope ellipsoid_to_zonotope(const Ellipsoid& E, int generators);

// h_Z(a) = a^T c + sum_j |a^T g_j|
double zonotope_support(const Zonotope& Z, const Vector& direction);

// Extreme points of Z. Throws for more than 16 generators.
VertexSet zonotope_vertices(const Zonotope& Z);

// Facet description of Z. Throws if Z is not full-dimensional.
Polytope zonotope_to_halfspace(const Zonotope& Z);

// Per-row support margins h_i = h_Z(A_P row i).
Vector support_margins(const Polytope& P, const Zonotope& Z);

// P minus s*Z (Pontryagin difference): {x : A x <= b - s h}. The result may
// be empty (negative slack); emptiness is not checked here.
Polytope tighten(const Polytope& P, const Zonotope& Z, double scale);

bool contains(const Polytope& P, const Vector& x, double tol = 1e-9);

// max c^T x over P; nullopt if P is empty, +inf if unbounded.
std::optional<double> maximize(const Polytope& P, const Vector& c, const LpSolver& solver);

bool is_empty(const Polytope& P, const LpSolver& solver);

// Drops rows implied by the others (within tol).
Polytope remove_redundant_rows(const Polytope& P, const LpSolver& solver, double tol = 1e-9);

// Vertices of a bounded polytope by enumerating d-subsets of rows; intended
// for plotting small sets. In 2D the vertices are returned in angular order.
VertexSet polytope_vertices(const Polytope& P, double tol = 1e-9);

// Maximal positively invariant set of z+ = A_K z inside
// {z in state_set : K z in input_set}, by the pre-set iteration with redundant
// row pruning. Throws InfeasibleError("terminal set empty") for an empty
// starting set and SolveError if max_iter is reached.
Polytope mpi_terminal_set(const Matrix& AK, const Matrix& K, const Polytope& state_set,
                          const std::optional<Polytope>& input_set, int max_iter = 200);

}  // namespace dynsmpc
