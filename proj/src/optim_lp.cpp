#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dynsmpc/optim.hpp"

namespace dynsmpc {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kUnbounded:
      return "unbounded";
    case SolveStatus::kNumericalFailure:
      return "numerical failure";
  }
  return "unknown";
}

LinearProgram LinearProgram::free(int num_vars) {
  LinearProgram lp;
  lp.cost = Vector::Zero(num_vars);
  lp.A_eq.resize(0, num_vars);
  lp.b_eq.resize(0);
  lp.A_in.resize(0, num_vars);
  lp.b_in.resize(0);
  lp.lower = Vector::Constant(num_vars, -kInf);
  lp.upper = Vector::Constant(num_vars, kInf);
  return lp;
}

double lp_violation(const LinearProgram& lp, const Vector& x) {
  double worst = 0.0;
  if (lp.A_eq.rows() > 0) worst = std::max(worst, (lp.A_eq * x - lp.b_eq).cwiseAbs().maxCoeff());
  if (lp.A_in.rows() > 0) worst = std::max(worst, (lp.A_in * x - lp.b_in).maxCoeff());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (lp.lower.size() > 0) worst = std::max(worst, lp.lower(j) - x(j));
    if (lp.upper.size() > 0) worst = std::max(worst, x(j) - lp.upper(j));
  }
  return worst;
}

namespace {

// How an original variable is expressed in nonnegative standard-form columns:
// x = offset + sign * y[pos] - y[neg].
struct ColumnMap {
  double offset = 0.0;
  int pos = -1;
  double sign = 1.0;
  int neg = -1;
};

class Tableau {
 public:
  Tableau(Matrix T, std::vector<int> basis, const LpOptions& options)
      : T_(std::move(T)), basis_(std::move(basis)), options_(options) {}

  int rows() const { return static_cast<int>(T_.rows()) - 1; }
  int rhs_col() const { return static_cast<int>(T_.cols()) - 1; }
  Matrix& data() { return T_; }
  std::vector<int>& basis() { return basis_; }

  // Installs cost c (over all non-rhs columns) as the objective row, expressed
  // in reduced form for the current basis.
  void set_objective(const Vector& c) {
    const int m = rows();
    T_.row(m).setZero();
    T_.row(m).head(c.size()) = c.transpose();
    for (int i = 0; i < m; ++i) {
      const double cb = c(basis_[i]);
      if (cb != 0.0) T_.row(m) -= cb * T_.row(i);
    }
  }

  double objective() const { return -T_(rows(), rhs_col()); }

  // Runs simplex iterations over columns [0, allowed_cols).
  SolveStatus run(int allowed_cols, int& iterations) {
    const int m = rows();
    const int rhs = rhs_col();
    bool bland = false;
    int degenerate_run = 0;
    for (;;) {
      if (iterations >= options_.max_iterations) return SolveStatus::kNumericalFailure;

      int enter = -1;
      double best = -options_.optimality_tol;
      for (int j = 0; j < allowed_cols; ++j) {
        const double d = T_(m, j);
        if (d < best) {
          enter = j;
          if (bland) break;
          best = d;
        }
      }
      if (enter < 0) return SolveStatus::kOptimal;

      int leave = -1;
      double best_ratio = kInf;
      double best_pivot = 0.0;
      for (int i = 0; i < m; ++i) {
        const double a = T_(i, enter);
        if (a <= kPivotTol) continue;
        const double ratio = std::max(T_(i, rhs), 0.0) / a;
        const double tie = 1e-12 * (1.0 + std::abs(best_ratio));
        bool take = false;
        if (leave < 0 || ratio < best_ratio - tie) {
          take = true;
        } else if (ratio <= best_ratio + tie) {
          take = bland ? basis_[i] < basis_[leave] : a > best_pivot;
        }
        if (take) {
          leave = i;
          best_ratio = ratio;
          best_pivot = a;
        }
      }
      if (leave < 0) return SolveStatus::kUnbounded;

      if (best_ratio <= 1e-12) {
        if (++degenerate_run > 50) bland = true;
      } else {
        degenerate_run = 0;
      }
      pivot(leave, enter);
      ++iterations;
    }
  }

  void pivot(int r, int c) {
    T_.row(r) /= T_(r, c);
    for (Eigen::Index i = 0; i < T_.rows(); ++i) {
      if (i == r) continue;
      const double factor = T_(i, c);
      if (factor != 0.0) T_.row(i) -= factor * T_.row(r);
    }
    T_.col(c).setZero();
    T_(r, c) = 1.0;
    const int rhs = rhs_col();
    for (Eigen::Index i = 0; i + 1 < T_.rows(); ++i) {
      if (T_(i, rhs) < 0.0 && T_(i, rhs) > -1e-13) T_(i, rhs) = 0.0;
    }
    basis_[r] = c;
  }

  static constexpr double kPivotTol = 1e-9;

 private:
  Matrix T_;
  std::vector<int> basis_;
  LpOptions options_;
};

}  // namespace

LpResult SimplexSolver::solve(const LinearProgram& lp) const {
  const int n = lp.num_vars();
  const Vector lower = lp.lower.size() ? lp.lower : Vector::Constant(n, -kInf);
  const Vector upper = lp.upper.size() ? lp.upper : Vector::Constant(n, kInf);
  const Eigen::Index n_eq = lp.A_eq.rows();
  const Eigen::Index n_in = lp.A_in.rows();
  if ((n_eq > 0 && lp.A_eq.cols() != n) || (n_in > 0 && lp.A_in.cols() != n) ||
      lp.b_eq.size() != n_eq || lp.b_in.size() != n_in || lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("SimplexSolver: inconsistent LP dimensions");
  }

  LpResult result;
  for (int j = 0; j < n; ++j) {
    if (lower(j) > upper(j)) {
      result.status = SolveStatus::kInfeasible;
      return result;
    }
  }

  // Standard-form columns.
  std::vector<ColumnMap> cmap(n);
  std::vector<std::pair<int, double>> bound_rows;
  int ncol = 0;
  for (int j = 0; j < n; ++j) {
    const double l = lower(j);
    const double u = upper(j);
    ColumnMap& c = cmap[j];
    if (l == u) {
      c.offset = l;
    } else if (std::isfinite(l)) {
      c.offset = l;
      c.pos = ncol++;
      if (std::isfinite(u)) bound_rows.emplace_back(c.pos, u - l);
    } else if (std::isfinite(u)) {
      c.offset = u;
      c.pos = ncol++;
      c.sign = -1.0;
    } else {
      c.pos = ncol++;
      c.neg = ncol++;
    }
  }

  const int n_bd = static_cast<int>(bound_rows.size());
  const int m = static_cast<int>(n_eq + n_in) + n_bd;
  const int n_slack = static_cast<int>(n_in) + n_bd;
  Matrix S = Matrix::Zero(m, ncol + n_slack);
  Vector r(m);
  std::vector<bool> has_slack(m, false);

  auto map_row = [&](const auto& arow, double rhs, int row) {
    double b = rhs;
    for (int j = 0; j < n; ++j) {
      const double a = arow(j);
      if (a == 0.0) continue;
      const ColumnMap& c = cmap[j];
      b -= a * c.offset;
      if (c.pos >= 0) S(row, c.pos) += a * c.sign;
      if (c.neg >= 0) S(row, c.neg) -= a;
    }
    r(row) = b;
  };
  int row = 0;
  for (Eigen::Index i = 0; i < n_eq; ++i, ++row) map_row(lp.A_eq.row(i), lp.b_eq(i), row);
  for (Eigen::Index i = 0; i < n_in; ++i, ++row) map_row(lp.A_in.row(i), lp.b_in(i), row);
  for (const auto& [col, width] : bound_rows) {
    S(row, col) = 1.0;
    r(row) = width;
    ++row;
  }

  // Row equilibration, then slacks with unit coefficients.
  for (int i = 0; i < m; ++i) {
    const double scale = ncol > 0 ? S.row(i).head(ncol).cwiseAbs().maxCoeff() : 0.0;
    if (scale > 0.0) {
      S.row(i) /= scale;
      r(i) /= scale;
    } else {
      // Constant row: 0 = r or 0 <= r.
      const bool is_eq = i < n_eq;
      const double tol = options_.feasibility_tol * std::max(1.0, std::abs(r(i)));
      if ((is_eq && std::abs(r(i)) > tol) || (!is_eq && r(i) < -tol)) {
        result.status = SolveStatus::kInfeasible;
        return result;
      }
    }
  }
  for (int i = static_cast<int>(n_eq), s = 0; i < m; ++i, ++s) {
    S(i, ncol + s) = 1.0;
    has_slack[i] = true;
  }

  // Rows with negative rhs are negated; their slack can no longer start basic.
  std::vector<int> basis(m, -1);
  int n_art = 0;
  for (int i = 0; i < m; ++i) {
    if (r(i) < 0.0) {
      S.row(i) *= -1.0;
      r(i) *= -1.0;
      if (has_slack[i]) has_slack[i] = false;
    }
    if (!has_slack[i]) ++n_art;
  }

  const int n_struct = ncol + n_slack;
  Matrix T = Matrix::Zero(m + 1, n_struct + n_art + 1);
  T.topLeftCorner(m, n_struct) = S;
  T.col(n_struct + n_art).head(m) = r;
  for (int i = static_cast<int>(n_eq), s = 0; i < m; ++i, ++s) {
    if (has_slack[i]) basis[i] = ncol + s;
  }
  for (int i = 0, a = 0; i < m; ++i) {
    if (!has_slack[i]) {
      T(i, n_struct + a) = 1.0;
      basis[i] = n_struct + a;
      ++a;
    }
  }

  Tableau tab(std::move(T), std::move(basis), options_);
  int iterations = 0;

  if (n_art > 0) {
    Vector c1 = Vector::Zero(n_struct + n_art);
    c1.tail(n_art).setOnes();
    tab.set_objective(c1);
    const SolveStatus s1 = tab.run(n_struct + n_art, iterations);
    if (s1 == SolveStatus::kNumericalFailure) {
      result.status = s1;
      result.iterations = iterations;
      return result;
    }
    const double rnorm = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
    if (tab.objective() > options_.feasibility_tol * std::max(1.0, rnorm)) {
      result.status = SolveStatus::kInfeasible;
      result.iterations = iterations;
      return result;
    }
    // Pivot remaining (zero-valued) artificials out; drop redundant rows.
    std::vector<int> keep;
    for (int i = 0; i < tab.rows(); ++i) {
      if (tab.basis()[i] >= n_struct) {
        int col = -1;
        double best = 1e-9;
        for (int j = 0; j < n_struct; ++j) {
          if (std::abs(tab.data()(i, j)) > best) {
            best = std::abs(tab.data()(i, j));
            col = j;
          }
        }
        if (col >= 0) {
          tab.pivot(i, col);
          keep.push_back(i);
        }
      } else {
        keep.push_back(i);
      }
    }
    Matrix T2(keep.size() + 1, n_struct + 1);
    std::vector<int> basis2;
    for (std::size_t k = 0; k < keep.size(); ++k) {
      T2.row(k).head(n_struct) = tab.data().row(keep[k]).head(n_struct);
      T2(k, n_struct) = tab.data()(keep[k], tab.rhs_col());
      basis2.push_back(tab.basis()[keep[k]]);
    }
    T2.row(keep.size()).setZero();
    tab = Tableau(std::move(T2), std::move(basis2), options_);
  }

  Vector c2 = Vector::Zero(n_struct);
  for (int j = 0; j < n; ++j) {
    const ColumnMap& c = cmap[j];
    if (c.pos >= 0) c2(c.pos) += c.sign * lp.cost(j);
    if (c.neg >= 0) c2(c.neg) -= lp.cost(j);
  }
  tab.set_objective(c2);
  const SolveStatus s2 = tab.run(n_struct, iterations);
  result.iterations = iterations;
  if (s2 != SolveStatus::kOptimal) {
    result.status = s2;
    return result;
  }

  Vector y = Vector::Zero(n_struct);
  for (int i = 0; i < tab.rows(); ++i) y(tab.basis()[i]) = std::max(0.0, tab.data()(i, tab.rhs_col()));
  result.x.resize(n);
  for (int j = 0; j < n; ++j) {
    const ColumnMap& c = cmap[j];
    double v = c.offset;
    if (c.pos >= 0) v += c.sign * y(c.pos);
    if (c.neg >= 0) v -= y(c.neg);
    result.x(j) = v;
  }
  result.objective = lp.cost.dot(result.x);
  result.status = SolveStatus::kOptimal;
  return result;
}

}  // namespace dynsmpc
