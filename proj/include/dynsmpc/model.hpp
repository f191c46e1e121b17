#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dynsmpc/linalg.hpp"
#include "dynsmpc/sets.hpp"

namespace dynsmpc {

// x(k+1) = A x(k) + B u(k) + w(k)
struct LtiSystem {
  Matrix A;
  Matrix B;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
};

enum class NoiseFamily {
  kGaussian,    // chi-squared scale, samplable
  kMomentOnly,  // only mean and covariance known; Chebyshev scale
};

const char* to_string(NoiseFamily family);

// Zero-mean additive disturbance.
struct NoiseModel {
  Matrix covariance;
  NoiseFamily family = NoiseFamily::kGaussian;
};

struct ConstraintSpec {
  Polytope state_set;
  std::optional<Polytope> input_set;  // absent: input unconstrained
  double p_bar_x = 0.0;
  std::optional<double> p_bar_u;
};

struct ProblemInstance {
  LtiSystem system;
  NoiseModel noise;
  ConstraintSpec constraints;
  Matrix Q;
  Matrix R;
  int horizon = 1;
  Vector x0;
};

struct Violation {
  enum class Severity { kError, kWarning };
  Severity severity = Severity::kError;
  std::string message;
};

// Every invariant violation of the instance; an empty list means valid.
// Stabilizability of (A, B) is checked with the PBH test and reported as a
// warning only.
std::vector<Violation> validate_instance(const ProblemInstance& instance);

// True iff no kError entries.
bool is_valid(const std::vector<Violation>& violations);

// Draws w ~ N(0, covariance) as L * xi with L the symmetric square root of the
// covariance and xi standard normal. Throws std::invalid_argument for
// moment-only noise ("no sampling distribution").
Vector sample_noise(const NoiseModel& noise, std::mt19937_64& rng);

// Reusable sampler holding the covariance factor.
class GaussianSampler {
 public:
  explicit GaussianSampler(const NoiseModel& noise);

  Vector operator()(std::mt19937_64& rng) const;

 private:
  Matrix factor_;
};

// The DC-DC converter regulation benchmark: the built-in case-study instance.
ProblemInstance dc_dc_converter_instance();

}  // namespace dynsmpc
