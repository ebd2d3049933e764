#include "rllg/squashed_gaussian.hpp"

#include <cmath>
#include <numbers>

namespace rllg::gaussian {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2*pi)

double softplus(double x) {
  // stable for large |x|
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// log(1 - tanh^2(u)) without forming tanh(u)
double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

}  // namespace

SampleBatch apply_eps(const Eigen::Ref<const Matrix>& mean,
                      const Eigen::Ref<const Matrix>& log_std,
                      const Matrix& eps) {
  SampleBatch out;
  out.eps = eps;
  out.u = mean + (log_std.array().exp() * eps.array()).matrix();
  out.a = out.u.array().tanh().min(kActionClip).max(-kActionClip).matrix();
  return out;
}

SampleBatch sample(const Eigen::Ref<const Matrix>& mean,
                   const Eigen::Ref<const Matrix>& log_std,
                   std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix eps(mean.rows(), mean.cols());
  for (Eigen::Index i = 0; i < eps.rows(); ++i)
    for (Eigen::Index j = 0; j < eps.cols(); ++j) eps(i, j) = normal(rng);
  return apply_eps(mean, log_std, eps);
}

Vector log_prob_from_u(const Matrix& u, const Eigen::Ref<const Matrix>& mean,
                       const Eigen::Ref<const Matrix>& log_std) {
  Vector lp = Vector::Zero(u.rows());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      const double sigma = std::exp(log_std(i, j));
      const double z = (u(i, j) - mean(i, j)) / sigma;
      acc += -0.5 * z * z - log_std(i, j) - kHalfLog2Pi;
      acc -= log_one_minus_tanh_sq(u(i, j));
    }
    lp(i) = acc;
  }
  return lp;
}

Vector log_prob_of_action(const Matrix& action,
                          const Eigen::Ref<const Matrix>& mean,
                          const Eigen::Ref<const Matrix>& log_std) {
  Matrix u(action.rows(), action.cols());
  for (Eigen::Index i = 0; i < action.rows(); ++i)
    for (Eigen::Index j = 0; j < action.cols(); ++j)
      u(i, j) = std::atanh(std::clamp(action(i, j), -kAtanhClip, kAtanhClip));
  return log_prob_from_u(u, mean, log_std);
}

Matrix tanh_mean(const Eigen::Ref<const Matrix>& mean) {
  return mean.array().tanh().matrix();
}

}  // namespace rllg::gaussian
