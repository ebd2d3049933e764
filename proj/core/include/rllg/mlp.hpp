#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rllg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kReLU, kTanH };

enum class HeadKind {
  kLinear,            // raw affine output
  kSquashedGaussian,  // (mean, log-std) pair per action dim, log-std clamped
  kBoundedTanh,       // phi * tanh(z), elementwise in [-phi, phi]
};

// log-std clamp applied inside the SquashedGaussian head, before exp().
inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

/// Architecture of a dense network: layer widths (input, hidden..., output)
/// plus the hidden activation and the output head.
struct MlpSpec {
  std::vector<int> widths;
  Activation hidden_activation = Activation::kReLU;
  HeadKind head = HeadKind::kLinear;
  int action_dim = 0;  // SquashedGaussian only
  double phi = 0.0;    // BoundedTanh only

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  std::size_t param_count() const;
  int layer_count() const { return static_cast<int>(widths.size()) - 1; }

  /// Throws std::invalid_argument on malformed specs (fewer than two layers,
  /// non-positive widths, SquashedGaussian width != 2*action_dim, phi < 0).
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

MlpSpec mlp_spec(std::vector<int> widths, Activation act, HeadKind head,
                 int action_dim = 0, double phi = 0.0);

/// Dense feed-forward network over a flat parameter vector with reverse-mode
/// gradients. forward() caches intermediates; backward() consumes them and
/// accumulates d(upstream . output)/d(params) into grad(), returning the
/// gradient with respect to the input. Rows are samples throughout.
class Network {
 public:
  Network(MlpSpec spec, std::uint64_t init_seed);

  const MlpSpec& spec() const { return spec_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& grad() { return grad_; }
  const std::vector<double>& grad() const { return grad_; }
  void zero_grad();

  const Matrix& forward(const Matrix& input);
  Matrix backward(const Matrix& upstream, bool accumulate_grad = true);

  // single-sample conveniences
  std::vector<double> forward(std::span<const double> input);
  std::vector<double> backward(std::span<const double> upstream,
                               bool accumulate_grad = true);

  /// Cache-free forward pass; does not disturb gradient state, safe to call
  /// through a const reference shared across threads.
  std::vector<double> infer(std::span<const double> input) const;
  Matrix infer(const Matrix& input) const;

  /// Output of the last forward(); valid until the next forward call.
  const Matrix& output() const { return out_; }

 private:
  using RowMajor =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<RowMajor> weight(int layer);
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  Eigen::Map<RowMajor> weight_grad(int layer);
  Eigen::Map<Eigen::VectorXd> bias_grad(int layer);
  std::size_t layer_offset(int layer) const;

  MlpSpec spec_;
  std::vector<double> params_;
  std::vector<double> grad_;

  // forward caches
  std::vector<Matrix> acts_;      // acts_[0] is the input batch
  std::vector<Matrix> preacts_;   // pre-activation per layer
  Matrix head_tanh_;              // tanh(z_L) for the BoundedTanh head
  Matrix out_;
  bool has_forward_ = false;
};

/// Adaptive-moment optimizer state for one flat parameter vector.
struct AdamState {
  std::vector<double> m, v;
  std::int64_t step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n, double learning_rate = 3e-4);
};

/// One adaptive-moment step on an arbitrary flat vector (grad is not reset).
void adam_step(std::span<double> params, std::span<const double> grad,
               AdamState& opt);

/// Applies the accumulated gradient to the network and resets grad to zero.
void adam_step(Network& net, AdamState& opt);

/// target <- (1 - tau) * target + tau * online. Specs must match exactly.
void soft_update(Network& target, const Network& online, double tau);

// Checkpoint format "RLLG-NET v1": one-line header, spec fields, then the
// parameter vector in layer order.
void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);
void write_network(const Network& net, std::ostream& os);
Network read_network(std::istream& is, const std::string& origin);

}  // namespace rllg
