#pragma once

#include <limits>
#include <string>

#include "dynsmpc/linalg.hpp"

namespace dynsmpc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

const char* to_string(SolveStatus status);

// min c^T x  s.t.  A_eq x = b_eq,  A_in x <= b_in,  lower <= x <= upper.
// Empty A_eq / A_in are allowed (zero rows). Bounds may be infinite; an empty
// bound vector means "free".
struct LinearProgram {
  Vector cost;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_in;
  Vector b_in;
  Vector lower;
  Vector upper;

  int num_vars() const { return static_cast<int>(cost.size()); }

  // Convenience constructor for a free-variable LP with no rows.
  static LinearProgram free(int num_vars);
};

struct LpResult {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Vector x;
  double objective = 0.0;
  int iterations = 0;
};

struct LpOptions {
  double feasibility_tol = 1e-8;
  double optimality_tol = 1e-9;
  int max_iterations = 20000;
};

class LpSolver {
 public:
  virtual ~LpSolver() = default;
  virtual LpResult solve(const LinearProgram& lp) const = 0;
};

// Dense two-phase tableau simplex. Returns an optimal basic solution.
// Dantzig pricing, switching to Bland's rule after a run of degenerate pivots.
class SimplexSolver final : public LpSolver {
 public:
  explicit SimplexSolver(LpOptions options = {}) : options_(options) {}
  LpResult solve(const LinearProgram& lp) const override;

 private:
  LpOptions options_;
};

// Largest violation of the LP rows and bounds at x (0 when feasible).
double lp_violation(const LinearProgram& lp, const Vector& x);

// min 0.5 x^T H x + f^T x  s.t.  A_eq x = b_eq,  A_in x <= b_in.
// H must be symmetric positive definite.
struct QuadraticProgram {
  Matrix H;
  Vector f;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_in;
  Vector b_in;

  int num_vars() const { return static_cast<int>(f.size()); }
};

struct QpResult {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Vector x;
  double objective = 0.0;
  Vector multipliers_in;  // >= 0, one per inequality row
  int iterations = 0;
};

struct QpOptions {
  double feasibility_tol = 1e-9;
  int max_iterations = 5000;
};

class QpSolver {
 public:
  virtual ~QpSolver() = default;
  virtual QpResult solve(const QuadraticProgram& qp) const = 0;
};

// Goldfarb-Idnani dual active-set method. The active-set factorization is
// recomputed by QR at each step, which is cheap at MPC sizes.
class ActiveSetQpSolver final : public QpSolver {
 public:
  explicit ActiveSetQpSolver(QpOptions options = {}) : options_(options) {}
  QpResult solve(const QuadraticProgram& qp) const override;

 private:
  QpOptions options_;
};

double qp_violation(const QuadraticProgram& qp, const Vector& x);

}  // namespace dynsmpc
