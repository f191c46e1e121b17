#pragma once

#include <vector>

#include "dynsmpc/linalg.hpp"

namespace dynsmpc {

// {x : A x <= b}. Unbounded sets are allowed.
struct Polytope {
  Matrix A;
  Vector b;

  int dim() const { return static_cast<int>(A.cols()); }
  int rows() const { return static_cast<int>(A.rows()); }

  static Polytope box(const Vector& lo, const Vector& hi);
};

// {x : (x - c)^T E^{-1} (x - c) <= 1}. A zero shape denotes the single point c.
struct Ellipsoid {
  Matrix shape;
  Vector center;

  int dim() const { return static_cast<int>(shape.rows()); }
};

// c + G * [-1, 1]^g
struct Zonotope {
  Vector center;
  Matrix generators;

  int dim() const { return static_cast<int>(generators.rows()); }
  int order() const { return static_cast<int>(generators.cols()); }
};

struct VertexSet {
  std::vector<Vector> vertices;

  std::size_t size() const { return vertices.size(); }
};

}  // namespace dynsmpc
