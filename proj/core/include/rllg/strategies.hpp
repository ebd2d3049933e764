#pragma once

#include <optional>
#include <string>

#include "rllg/guide.hpp"
#include "rllg/sac.hpp"

namespace rllg {

/// Epoch-indexed weight beta^k: piecewise-constant geometric schedule with
/// kappa = floor(epoch / period). The geometric factor stays in [0,1]; beta0
/// scales it (sweeps use beta0 > 1).
struct Scheduler {
  enum class Kind { kConstant, kGeometricDecay, kGeometricRise };
  Kind kind = Kind::kConstant;
  double beta0 = 1.0;
  double delta = 0.8;
  int period = 50;

  double factor(int epoch) const;
  double value(int epoch) const { return beta0 * factor(epoch); }
  void validate() const;
};

enum class StrategyKind { kSac, kSag, kNaiveSag, kRg, kPig, kPag, kDiscretePag };

StrategyKind strategy_kind_from_string(const std::string& s);
std::string to_string(StrategyKind k);

/// How close the policy is to the guide action: -(distance)^2 of the
/// deterministic actions, or the policy log-density of the guide action.
enum class BcMetric { kNegSquaredDistance, kGuideLogDensity };

struct StrategyConfig {
  StrategyKind kind = StrategyKind::kSac;
  Scheduler scheduler;
  double phi = 0.2;  // PAG perturbation bound
  BcMetric bc_metric = BcMetric::kGuideLogDensity;
  double lambda_threshold = 0.5;

  void validate() const;
};

/// Per-row metric values for a batch; d_head (batch x 2d) receives
/// d(metric)/d(policy head output) when non-null.
Vector bc_metric_batch(const Matrix& policy_head, const Matrix& guide_actions,
                       BcMetric metric, Matrix* d_head = nullptr);

/// Single-state metric against the current policy.
double bc_metric_value(const SacAgent& agent, std::span<const double> s,
                       std::span<const double> guide_action, BcMetric metric);

/// Shaped reward r + beta^k * lambda(s) * metric, applied at sampling time.
double rg_shaped_reward(double r, double lambda_s, double metric, int epoch,
                        const Scheduler& scheduler);

/// Guide-integration strategy: owns the scheduler state interpretation and,
/// for PAG, the perturbation network and its optimizer.
class Strategy {
 public:
  Strategy(StrategyConfig cfg, int obs_dim, int action_dim,
           const SacConfig& net_cfg, std::uint64_t seed);

  const StrategyConfig& config() const { return cfg_; }
  bool needs_guide() const { return cfg_.kind != StrategyKind::kSac; }
  /// True for the strategies that execute the guide branch directly.
  bool switches_actions() const;

  std::vector<double> compose_action(SacAgent& agent, const LocalGuide* guide,
                                     std::span<const double> s, int epoch,
                                     ActionMode mode, std::mt19937_64& rng);

  /// Bootstrap actions for the critic target (the hook the spec's APE update
  /// plugs in). Policy rows carry their log-density; guide-branch rows carry
  /// an exactly-zero entropy term.
  HookResult target_actions(SacAgent& agent, const LocalGuide* guide,
                            const Matrix& s_next, int epoch,
                            std::mt19937_64& rng);
  TargetPolicyHook make_hook(SacAgent& agent, const LocalGuide* guide,
                             std::mt19937_64& rng);

  /// RG: shaped rewards for a batch under the current policy.
  Vector shaped_rewards(const SacAgent& agent, const LocalGuide& guide,
                        const Batch& batch, int epoch) const;

  /// PIG: actor ascent on J + beta^k * mean(lambda * metric).
  double pig_policy_loss(SacAgent& agent, const Batch& batch,
                         const LocalGuide& guide, int epoch,
                         std::mt19937_64& rng);

  /// PAG: ascend mean(lambda * min Q(s, clip(a_g + beta^k xi))) in phi only.
  double perturbation_update(SacAgent& agent, const LocalGuide& guide,
                             const Batch& batch, int epoch);

  Network* perturbation() { return perturbation_ ? &*perturbation_ : nullptr; }
  const Network* perturbation() const {
    return perturbation_ ? &*perturbation_ : nullptr;
  }
  AdamState& perturbation_opt() { return *pert_opt_; }

 private:
  std::vector<double> guide_branch_action(const LocalGuide& guide,
                                          std::span<const double> s, int epoch);

  StrategyConfig cfg_;
  std::optional<Network> perturbation_;
  std::optional<AdamState> pert_opt_;
};

/// Discrete-action extension: in the guide region take the guide action with
/// probability 1 - beta^k, otherwise (and outside) sample the policy and bin
/// it. Returns the discrete action index.
int discrete_compose(SacAgent& agent, const LocalGuide& guide,
                     std::span<const double> s, int epoch,
                     const Scheduler& scheduler, int n_actions,
                     double lambda_threshold, std::mt19937_64& rng);

}  // namespace rllg
