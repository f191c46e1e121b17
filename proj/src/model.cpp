#include "dynsmpc/model.hpp"

#include <complex>
#include <stdexcept>

#include <fmt/format.h>

namespace dynsmpc {

const char* to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::kGaussian:
      return "gaussian";
    case NoiseFamily::kMomentOnly:
      return "moment-only";
  }
  return "unknown";
}

Polytope Polytope::box(const Vector& lo, const Vector& hi) {
  if (lo.size() != hi.size()) throw std::invalid_argument("box: bound size mismatch");
  const Eigen::Index d = lo.size();
  Polytope P;
  P.A.resize(2 * d, d);
  P.b.resize(2 * d);
  P.A.topRows(d) = Matrix::Identity(d, d);
  P.A.bottomRows(d) = -Matrix::Identity(d, d);
  P.b.head(d) = hi;
  P.b.tail(d) = -lo;
  return P;
}

namespace {

void check_polytope(const Polytope& P, int dim, const char* name, std::vector<Violation>& out) {
  if (P.A.cols() != dim || P.A.rows() != P.b.size() || P.A.rows() < 1) {
    out.push_back({Violation::Severity::kError,
                   fmt::format("{} must have {} columns and matching b (got {}x{}, b of {})", name,
                               dim, P.A.rows(), P.A.cols(), P.b.size())});
    return;
  }
  if (!P.A.allFinite() || !P.b.allFinite()) {
    out.push_back({Violation::Severity::kError, fmt::format("{} has non-finite entries", name)});
    return;
  }
  for (Eigen::Index i = 0; i < P.A.rows(); ++i) {
    if (P.A.row(i).norm() == 0.0) {
      out.push_back({Violation::Severity::kError, fmt::format("{} row {} is zero", name, i)});
      return;
    }
  }
  // The origin is interior iff every halfspace holds strictly at 0.
  if ((P.b.array() <= 0.0).any()) {
    out.push_back({Violation::Severity::kError, fmt::format("origin not interior to {}", name)});
  }
}

void check_probability(double p, const char* name, std::vector<Violation>& out) {
  if (!(p >= 0.0 && p < 1.0)) {
    out.push_back({Violation::Severity::kError, fmt::format("{} = {} outside [0, 1)", name, p)});
  }
}

// PBH test: rank [A - lambda I, B] = n for every eigenvalue with |lambda| >= 1.
bool stabilizable(const Matrix& A, const Matrix& B) {
  using CMatrix = Eigen::MatrixXcd;
  const Eigen::Index n = A.rows();
  Eigen::EigenSolver<Matrix> es(A, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (std::abs(lambda) < 1.0) continue;
    CMatrix M(n, n + B.cols());
    M.leftCols(n) = A.cast<std::complex<double>>() - lambda * CMatrix::Identity(n, n);
    M.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<CMatrix> svd(M);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) <= 1e-10 * std::max(1.0, sv(0))) return false;
  }
  return true;
}

}  // namespace

std::vector<Violation> validate_instance(const ProblemInstance& instance) {
  using Severity = Violation::Severity;
  std::vector<Violation> out;
  const auto& sys = instance.system;
  const Eigen::Index n = sys.A.rows();
  const Eigen::Index m = sys.B.cols();

  if (n < 1 || sys.A.cols() != n) {
    out.push_back({Severity::kError, fmt::format("A must be square and non-empty (got {}x{})",
                                                 sys.A.rows(), sys.A.cols())});
    return out;
  }
  if (sys.B.rows() != n || m < 1) {
    out.push_back({Severity::kError,
                   fmt::format("B must be {}xm with m >= 1 (got {}x{})", n, sys.B.rows(), m)});
    return out;
  }
  if (!sys.A.allFinite() || !sys.B.allFinite()) {
    out.push_back({Severity::kError, "system matrices have non-finite entries"});
  }

  const Matrix& W = instance.noise.covariance;
  if (W.rows() != n || W.cols() != n) {
    out.push_back({Severity::kError, fmt::format("covariance must be {}x{}", n, n)});
  } else if (!is_positive_definite(W)) {
    out.push_back({Severity::kError, "covariance not strictly positive definite"});
  }

  const auto& cons = instance.constraints;
  check_polytope(cons.state_set, static_cast<int>(n), "X", out);
  check_probability(cons.p_bar_x, "p_bar_x", out);
  if (cons.input_set.has_value() != cons.p_bar_u.has_value()) {
    out.push_back({Severity::kError, "p_bar_u must be given iff an input set is given"});
  }
  if (cons.input_set) check_polytope(*cons.input_set, static_cast<int>(m), "U", out);
  if (cons.p_bar_u) check_probability(*cons.p_bar_u, "p_bar_u", out);

  if (instance.Q.rows() != n || instance.Q.cols() != n) {
    out.push_back({Severity::kError, fmt::format("Q must be {}x{}", n, n)});
  } else if (!is_positive_definite(instance.Q)) {
    out.push_back({Severity::kError, "Q not symmetric strictly positive definite"});
  }
  if (instance.R.rows() != m || instance.R.cols() != m) {
    out.push_back({Severity::kError, fmt::format("R must be {}x{}", m, m)});
  } else if (!is_positive_definite(instance.R)) {
    out.push_back({Severity::kError, "R not symmetric strictly positive definite"});
  }
  if (instance.horizon < 1) {
    out.push_back({Severity::kError, fmt::format("horizon N = {} must be >= 1", instance.horizon)});
  }
  if (instance.x0.size() != n) {
    out.push_back({Severity::kError, fmt::format("initial state must have {} entries", n)});
  } else if (!instance.x0.allFinite()) {
    out.push_back({Severity::kError, "initial state has non-finite entries"});
  }

  if (sys.A.allFinite() && sys.B.allFinite() && !stabilizable(sys.A, sys.B)) {
    out.push_back({Severity::kWarning, "(A, B) does not appear stabilizable"});
  }
  return out;
}

bool is_valid(const std::vector<Violation>& violations) {
  for (const auto& v : violations) {
    if (v.severity == Violation::Severity::kError) return false;
  }
  return true;
}

GaussianSampler::GaussianSampler(const NoiseModel& noise) {
  if (noise.family != NoiseFamily::kGaussian) {
    throw std::invalid_argument("no sampling distribution for moment-only noise");
  }
  factor_ = symmetric_sqrt(noise.covariance);
}

Vector GaussianSampler::operator()(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector xi(factor_.cols());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = normal(rng);
  return factor_ * xi;
}

Vector sample_noise(const NoiseModel& noise, std::mt19937_64& rng) {
  return GaussianSampler(noise)(rng);
}

ProblemInstance dc_dc_converter_instance() {
  ProblemInstance inst;
  inst.system.A.resize(2, 2);
  inst.system.A << 1.000, 0.0075, -0.143, 0.996;
  inst.system.B.resize(2, 1);
  inst.system.B << 4.798, 0.115;
  inst.noise.covariance = 0.1 * Matrix::Identity(2, 2);
  inst.noise.family = NoiseFamily::kGaussian;
  inst.constraints.state_set = Polytope::box(Vector::Constant(2, -2.0), Vector::Constant(2, 2.0));
  inst.constraints.p_bar_x = 0.6;
  inst.Q = Eigen::Vector2d(1.0, 10.0).asDiagonal();
  inst.R = Matrix::Constant(1, 1, 10.0);
  inst.horizon = 15;
  inst.x0 = Vector::Ones(2);
  return inst;
}

}  // namespace dynsmpc
