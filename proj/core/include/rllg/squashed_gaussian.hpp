#pragma once

#include <random>

#include "rllg/mlp.hpp"

namespace rllg::gaussian {

// Actions are kept strictly inside (-1, 1); tanh of a large pre-squash value
// rounds to exactly 1.0 in double precision otherwise.
inline constexpr double kActionClip = 1.0 - 1e-12;
// Clip applied to external actions before the inverse tanh.
inline constexpr double kAtanhClip = 1.0 - 1e-6;

/// Splits a SquashedGaussian head output (batch x 2d) into mean / log-std views.
inline Eigen::Ref<const Matrix> mean_of(const Matrix& head_out) {
  return head_out.leftCols(head_out.cols() / 2);
}
inline Eigen::Ref<const Matrix> log_std_of(const Matrix& head_out) {
  return head_out.rightCols(head_out.cols() / 2);
}

struct SampleBatch {
  Matrix eps;  // standard normal draws
  Matrix u;    // mean + std .* eps
  Matrix a;    // tanh(u), strictly inside (-1, 1)
};

/// Reparameterized batch sample: a = tanh(mean + exp(log_std) * eps).
SampleBatch sample(const Eigen::Ref<const Matrix>& mean,
                   const Eigen::Ref<const Matrix>& log_std,
                   std::mt19937_64& rng);

/// Rebuilds u/a from frozen eps draws (finite-difference harnesses).
SampleBatch apply_eps(const Eigen::Ref<const Matrix>& mean,
                      const Eigen::Ref<const Matrix>& log_std,
                      const Matrix& eps);

/// Per-row log-density of the squashed action identified by its pre-squash u.
/// Uses log(1 - tanh^2 u) = 2(log 2 - u - softplus(-2u)); finite for any u.
Vector log_prob_from_u(const Matrix& u, const Eigen::Ref<const Matrix>& mean,
                       const Eigen::Ref<const Matrix>& log_std);

/// Log-density of an external action; the action is clipped into
/// [-kAtanhClip, kAtanhClip] before the inverse tanh.
Vector log_prob_of_action(const Matrix& action,
                          const Eigen::Ref<const Matrix>& mean,
                          const Eigen::Ref<const Matrix>& log_std);

/// Deterministic (evaluation) action: tanh(mean).
Matrix tanh_mean(const Eigen::Ref<const Matrix>& mean);

}  // namespace rllg::gaussian
