#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dynsmpc/optim.hpp"

namespace dynsmpc {

double qp_violation(const QuadraticProgram& qp, const Vector& x) {
  double worst = 0.0;
  if (qp.A_eq.rows() > 0) worst = std::max(worst, (qp.A_eq * x - qp.b_eq).cwiseAbs().maxCoeff());
  if (qp.A_in.rows() > 0) worst = std::max(worst, (qp.A_in * x - qp.b_in).maxCoeff());
  return worst;
}

namespace {

// Constraint in Goldfarb-Idnani form: normal^T x >= rhs (inequality) or
// normal^T x = rhs (equality), normal of unit length.
struct Row {
  Vector normal;
  double rhs = 0.0;
  int source = -1;  // index into A_in, or -1 for equalities
  bool equality = false;
};

class ActiveSet {
 public:
  ActiveSet(const Eigen::LLT<Matrix>& llt, int n) : llt_(llt), n_(n) {}

  int size() const { return static_cast<int>(rows_.size()); }
  const std::vector<int>& rows() const { return rows_; }
  std::vector<double>& u() { return u_; }

  void add(int row, const Vector& normal, double multiplier) {
    rows_.push_back(row);
    normals_.push_back(normal);
    u_.push_back(multiplier);
  }

  void drop(int pos) {
    rows_.erase(rows_.begin() + pos);
    normals_.erase(normals_.begin() + pos);
    u_.erase(u_.begin() + pos);
  }

  // Primal step direction z and dual step direction r for adding normal np.
  void directions(const Vector& np, Vector& z, Vector& r) const {
    const auto L = llt_.matrixL();
    const Vector w = L.solve(np);
    const int q = size();
    if (q == 0) {
      z = llt_.matrixU().solve(w);
      r.resize(0);
      return;
    }
    Matrix M(n_, q);
    for (int j = 0; j < q; ++j) M.col(j) = L.solve(normals_[j]);
    Eigen::HouseholderQR<Matrix> qr(M);
    const Matrix Q = qr.householderQ();
    const Vector d = Q.transpose() * w;
    const Vector d2 = Q.rightCols(n_ - q) * d.tail(n_ - q);
    z = llt_.matrixU().solve(d2);
    const Matrix R = qr.matrixQR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
    r = R.triangularView<Eigen::Upper>().solve(d.head(q));
  }

 private:
  const Eigen::LLT<Matrix>& llt_;
  int n_;
  std::vector<int> rows_;
  std::vector<Vector> normals_;
  std::vector<double> u_;
};

}  // namespace

QpResult ActiveSetQpSolver::solve(const QuadraticProgram& qp) const {
  const int n = qp.num_vars();
  if (qp.H.rows() != n || qp.H.cols() != n || (qp.A_eq.rows() > 0 && qp.A_eq.cols() != n) ||
      (qp.A_in.rows() > 0 && qp.A_in.cols() != n) || qp.b_eq.size() != qp.A_eq.rows() ||
      qp.b_in.size() != qp.A_in.rows()) {
    throw std::invalid_argument("ActiveSetQpSolver: inconsistent QP dimensions");
  }

  QpResult result;
  result.multipliers_in = Vector::Zero(qp.A_in.rows());
  const double tol = options_.feasibility_tol;

  Eigen::LLT<Matrix> llt(0.5 * (qp.H + qp.H.transpose()));
  if (llt.info() != Eigen::Success) {
    result.status = SolveStatus::kNumericalFailure;
    return result;
  }

  // Normalize rows; constant rows are checked once and discarded.
  std::vector<Row> rows;
  for (Eigen::Index i = 0; i < qp.A_eq.rows(); ++i) {
    const double nrm = qp.A_eq.row(i).norm();
    if (nrm == 0.0) {
      if (std::abs(qp.b_eq(i)) > tol) {
        result.status = SolveStatus::kInfeasible;
        return result;
      }
      continue;
    }
    rows.push_back({qp.A_eq.row(i).transpose() / nrm, qp.b_eq(i) / nrm, -1, true});
  }
  const int first_ineq = static_cast<int>(rows.size());
  for (Eigen::Index i = 0; i < qp.A_in.rows(); ++i) {
    const double nrm = qp.A_in.row(i).norm();
    if (nrm == 0.0) {
      if (qp.b_in(i) < -tol) {
        result.status = SolveStatus::kInfeasible;
        return result;
      }
      continue;
    }
    // a^T x <= b  <=>  (-a)^T x >= -b
    rows.push_back({-qp.A_in.row(i).transpose() / nrm, -qp.b_in(i) / nrm, static_cast<int>(i), false});
  }

  Vector x = -llt.solve(qp.f);
  ActiveSet active(llt, n);
  Vector z, r;
  const double zero_tol = 1e-12;
  int iterations = 0;

  auto slack = [&](int k) { return rows[k].normal.dot(x) - rows[k].rhs; };

  // Equalities enter first with full steps and are never dropped.
  for (int k = 0; k < first_ineq; ++k) {
    active.directions(rows[k].normal, z, r);
    const double s = slack(k);
    const double zn = z.dot(rows[k].normal);
    if (z.norm() <= zero_tol || std::abs(zn) <= zero_tol) {
      if (std::abs(s) > tol) {
        result.status = SolveStatus::kInfeasible;
        return result;
      }
      continue;  // dependent equality
    }
    const double t = -s / zn;
    x += t * z;
    for (int j = 0; j < active.size(); ++j) active.u()[j] -= t * r(j);
    active.add(k, rows[k].normal, t);
  }

  std::vector<bool> is_active(rows.size(), false);
  for (int k : active.rows()) is_active[k] = true;

  for (;;) {
    if (++iterations > options_.max_iterations) {
      result.status = SolveStatus::kNumericalFailure;
      return result;
    }
    int p = -1;
    double worst = -tol;
    for (int k = first_ineq; k < static_cast<int>(rows.size()); ++k) {
      if (is_active[k]) continue;
      const double s = slack(k);
      if (s < worst) {
        worst = s;
        p = k;
      }
    }
    if (p < 0) break;

    double u_plus = 0.0;
    for (;;) {
      active.directions(rows[p].normal, z, r);
      // Largest dual step keeping active inequality multipliers nonnegative.
      double t1 = kInf;
      int drop = -1;
      for (int j = 0; j < active.size(); ++j) {
        if (rows[active.rows()[j]].equality) continue;
        if (r(j) > zero_tol) {
          const double ratio = active.u()[j] / r(j);
          if (ratio < t1) {
            t1 = ratio;
            drop = j;
          }
        }
      }
      const double zn = z.dot(rows[p].normal);
      const double t2 = (z.norm() > zero_tol && zn > zero_tol) ? -slack(p) / zn : kInf;
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        result.status = SolveStatus::kInfeasible;
        result.iterations = iterations;
        return result;
      }
      if (std::isfinite(t2)) x += t * z;
      for (int j = 0; j < active.size(); ++j) active.u()[j] -= t * r(j);
      u_plus += t;
      if (t == t2) {
        active.add(p, rows[p].normal, u_plus);
        is_active[p] = true;
        break;
      }
      is_active[active.rows()[drop]] = false;
      active.drop(drop);
      if (++iterations > options_.max_iterations) {
        result.status = SolveStatus::kNumericalFailure;
        return result;
      }
    }
  }

  for (int j = 0; j < active.size(); ++j) {
    const Row& row = rows[active.rows()[j]];
    if (!row.equality) {
      result.multipliers_in(row.source) = active.u()[j] / qp.A_in.row(row.source).norm();
    }
  }
  result.x = x;
  result.objective = 0.5 * x.dot(qp.H * x) + qp.f.dot(x);
  result.iterations = iterations;
  result.status = SolveStatus::kOptimal;
  return result;
}

}  // namespace dynsmpc
