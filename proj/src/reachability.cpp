#include "dynsmpc/reachability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "dynsmpc/errors.hpp"

namespace dynsmpc {

namespace {

// Smith doubling for larger systems: S = sum_k A^k W A^kT.
Matrix lyapunov_doubling(const Matrix& AK, const Matrix& W) {
  Matrix S = W;
  Matrix Ak = AK;
  for (int it = 0; it < 64; ++it) {
    const Matrix step = Ak * S * Ak.transpose();
    S += step;
    if (step.norm() <= 1e-16 * S.norm()) return S;
    Ak = Ak * Ak;
  }
  throw SolveError("Lyapunov solve failed");
}

}  // namespace

Matrix solve_lyapunov(const Matrix& AK, const Matrix& W) {
  const Eigen::Index n = AK.rows();
  if (AK.cols() != n || W.rows() != n || W.cols() != n) {
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  }
  if (spectral_radius(AK) >= 1.0) throw SolveError("unstable closed loop");

  Matrix S;
  if (n <= 20) {
    const Eigen::Index n2 = n * n;
    Matrix kron(n2, n2);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        kron.block(i * n, j * n, n, n) = AK(i, j) * AK;
      }
    }
    const Matrix lhs = Matrix::Identity(n2, n2) - kron;
    Eigen::FullPivLU<Matrix> lu(lhs);
    if (!lu.isInvertible() || lu.rcond() < 1e-14) throw SolveError("Lyapunov solve failed");
    // Column-major vec on both sides: vec(A S A^T) = (A kron A) vec(S).
    const Vector vecW = Eigen::Map<const Vector>(W.data(), n2);
    const Vector vecS = lu.solve(vecW);
    S = Eigen::Map<const Matrix>(vecS.data(), n, n);
  } else {
    S = lyapunov_doubling(AK, W);
  }
  S = 0.5 * (S + S.transpose());
  const double residual = (AK * S * AK.transpose() - S + W).norm();
  if (!S.allFinite() || residual > 1e-10 * std::max(W.norm(), 1e-300)) {
    // One refinement step on the residual usually recovers the last digits.
    const Matrix R = AK * S * AK.transpose() - S + W;
    S += lyapunov_doubling(AK, R);
    S = 0.5 * (S + S.transpose());
  }
  return S;
}

double chi2_cdf(double x, int d) {
  if (d < 1) throw std::invalid_argument("chi2_cdf: degrees of freedom must be >= 1");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(0.5 * d, 0.5 * x);
}

double chi2_quantile(double p, int d) {
  if (d < 1) throw std::invalid_argument("chi2_quantile: degrees of freedom must be >= 1");
  if (!(p >= 0.0 && p < 1.0)) throw std::domain_error("chi2_quantile: p outside [0, 1)");
  if (p == 0.0) return 0.0;
  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(d));
  while (chi2_cdf(hi, d) < p) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 400 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, d) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double probability_scale(double p, int d, NoiseFamily family) {
  if (d < 1) throw std::invalid_argument("probability_scale: dimension must be >= 1");
  if (p == 1.0) throw std::domain_error("unbounded scale at p = 1");
  if (!(p >= 0.0 && p < 1.0)) throw std::domain_error(fmt::format("probability {} outside [0, 1)", p));
  switch (family) {
    case NoiseFamily::kMomentOnly:
      return static_cast<double>(d) / (1.0 - p);
    case NoiseFamily::kGaussian:
      return chi2_quantile(p, d);
  }
  throw std::invalid_argument("probability_scale: unknown family");
}

PrsPair build_prs(const LtiSystem& system, const NoiseModel& noise, const Matrix& K,
                  double p_bar_x, std::optional<double> p_bar_u,
                  std::optional<NoiseFamily> scale_family) {
  const NoiseFamily family = scale_family.value_or(noise.family);
  const int n = system.n();
  const int m = system.m();
  if (K.rows() != m || K.cols() != n) throw std::invalid_argument("build_prs: K must be m x n");

  PrsPair out;
  const Matrix AK = system.A + system.B * K;
  out.stationary_covariance = solve_lyapunov(AK, noise.covariance);
  out.p_tilde_x = probability_scale(p_bar_x, n, family);
  out.state_prs = {out.p_tilde_x * out.stationary_covariance, Vector::Zero(n)};

  if (p_bar_u) {
    Matrix input_cov = K * out.stationary_covariance * K.transpose();
    input_cov = 0.5 * (input_cov + input_cov.transpose());
    const double tr = input_cov.trace();
    if (!(tr > 0.0)) {
      out.warnings.emplace_back("input error covariance is zero (degenerate gain); input PRS is a point");
      input_cov.setZero();
    } else if (!is_positive_definite(input_cov)) {
      input_cov += 1e-12 * tr * Matrix::Identity(m, m);
      out.warnings.emplace_back("input error covariance rank deficient; regularized by 1e-12 * trace");
    }
    out.p_tilde_u = probability_scale(*p_bar_u, m, family);
    out.input_prs = Ellipsoid{*out.p_tilde_u * input_cov, Vector::Zero(m)};
  }
  return out;
}

double alpha_for_probability(double p_k, double p_bar, int d, NoiseFamily family) {
  if (p_k > p_bar) {
    throw std::domain_error(fmt::format("relaxed probability {} exceeds target {}", p_k, p_bar));
  }
  if (p_k == p_bar) return 1.0;
  const double full = probability_scale(p_bar, d, family);
  if (full == 0.0) return 1.0;
  return std::sqrt(probability_scale(p_k, d, family) / full);
}

double probability_for_alpha(double alpha, double p_bar, int d, NoiseFamily family) {
  alpha = std::clamp(alpha, 0.0, 1.0);
  if (alpha == 1.0) return p_bar;
  const double scaled = alpha * alpha * probability_scale(p_bar, d, family);
  switch (family) {
    case NoiseFamily::kGaussian:
      return chi2_cdf(scaled, d);
    case NoiseFamily::kMomentOnly:
      if (scaled <= 0.0) return 0.0;
      return std::max(0.0, 1.0 - static_cast<double>(d) / scaled);
  }
  throw std::invalid_argument("probability_for_alpha: unknown family");
}

double TighteningSchedule::alpha_at(int k) const {
  return (k >= 0 && k < alpha.size()) ? alpha(k) : 0.0;
}

double TighteningSchedule::beta_at(int k) const {
  if (!beta) return 0.0;
  return (k >= 0 && k < beta->size()) ? (*beta)(k) : 0.0;
}

double TighteningSchedule::px_at(int k, double p_bar_x) const {
  if (k < 0 || k >= relaxed_px.size()) return p_bar_x;
  return std::min(p_bar_x, relaxed_px(k));
}

TighteningSchedule make_schedule(const Vector& alpha, const std::optional<Vector>& beta,
                                 double p_bar_x, std::optional<double> p_bar_u, int n, int m,
                                 NoiseFamily family) {
  TighteningSchedule s;
  s.alpha = alpha.cwiseMax(0.0).cwiseMin(1.0);
  s.relaxed_px.resize(alpha.size());
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    s.relaxed_px(k) = probability_for_alpha(1.0 - s.alpha(k), p_bar_x, n, family);
  }
  if (beta) {
    if (!p_bar_u) throw std::invalid_argument("make_schedule: beta given without p_bar_u");
    s.beta = beta->cwiseMax(0.0).cwiseMin(1.0);
    Vector pu(beta->size());
    for (Eigen::Index k = 0; k < beta->size(); ++k) {
      pu(k) = probability_for_alpha(1.0 - (*s.beta)(k), *p_bar_u, m, family);
    }
    s.relaxed_pu = pu;
  }
  return s;
}

}  // namespace dynsmpc
