#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynsmpc/linalg.hpp"
#include "dynsmpc/model.hpp"
#include "dynsmpc/sets.hpp"

namespace dynsmpc {

// Stationary covariance of e(k+1) = A_K e(k) + w(k): the solution of
// A_K S A_K^T - S + W = 0, by a direct Kronecker solve.
Matrix solve_lyapunov(const Matrix& AK, const Matrix& W);

// Chi-squared CDF with d degrees of freedom.
double chi2_cdf(double x, int d);

// Inverse chi-squared CDF by bisection on chi2_cdf (tolerance 1e-10).
double chi2_quantile(double p, int d);

// Scale p~ such that {x : x^T S^{-1} x <= p~} is a probability-p reachable set.
// Gaussian: chi-squared quantile; moment-only: d / (1 - p) (Chebyshev).
double probability_scale(double p, int d, NoiseFamily family);

// Ellipsoidal reachable sets for the state error and the input error K e.
struct PrsPair {
  Ellipsoid state_prs;
  std::optional<Ellipsoid> input_prs;
  double p_tilde_x = 0.0;
  std::optional<double> p_tilde_u;
  Matrix stationary_covariance;
  std::vector<std::string> warnings;
};

// Builds the PRS pair at levels (p_bar_x, p_bar_u) for the closed loop A + B K.
// `scale_family` selects the probability scale; it defaults to the noise family.
PrsPair build_prs(const LtiSystem& system, const NoiseModel& noise, const Matrix& K,
                  double p_bar_x, std::optional<double> p_bar_u,
                  std::optional<NoiseFamily> scale_family = std::nullopt);

// PRS scale factor: the level-p_k set equals alpha times the level-p_bar set,
// alpha = sqrt(p~(p_k) / p~(p_bar)).
double alpha_for_probability(double p_k, double p_bar, int d, NoiseFamily family);

// Inverse of alpha_for_probability.
double probability_for_alpha(double alpha, double p_bar, int d, NoiseFamily family);

// Relaxation schedule produced by the safety step. alpha(k) is the relaxation
// amount: the state constraint at time k is X minus (1 - alpha(k)) R_x, so 0
// means fully tightened (level p_bar_x) and 1 means untightened.
// Entries beyond the horizon are zero.
struct TighteningSchedule {
  Vector alpha;
  std::optional<Vector> beta;
  Vector relaxed_px;
  std::optional<Vector> relaxed_pu;

  int horizon() const { return static_cast<int>(alpha.size()); }
  double alpha_at(int k) const;
  double beta_at(int k) const;
  // min(p_bar, p(k)); p_bar beyond the horizon.
  double px_at(int k, double p_bar_x) const;
};

// Fills relaxed_px / relaxed_pu from alpha / beta.
TighteningSchedule make_schedule(const Vector& alpha, const std::optional<Vector>& beta,
                                 double p_bar_x, std::optional<double> p_bar_u, int n, int m,
                                 NoiseFamily family);

}  // namespace dynsmpc
