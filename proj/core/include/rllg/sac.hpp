#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>

#include "rllg/mlp.hpp"
#include "rllg/replay.hpp"

namespace rllg {

struct SacConfig {
  std::vector<int> hidden = {64, 64};
  Activation policy_activation = Activation::kReLU;
  Activation q_activation = Activation::kReLU;
  double lr = 3e-4;
  double gamma = 0.99;
  double tau = 0.005;
  double init_alpha = 1.0;
};

/// Entropy-regularized actor-critic with twin Q networks and Polyak-averaged
/// targets. The bootstrap action of the critic update comes from a pluggable
/// hook, which is what guide-integration strategies override.
class SacAgent {
 public:
  SacAgent(int obs_dim, int action_dim, const SacConfig& cfg,
           std::uint64_t seed);

  Network& policy() { return policy_; }
  Network& q1() { return q1_; }
  Network& q2() { return q2_; }
  Network& q1_target() { return q1_target_; }
  Network& q2_target() { return q2_target_; }
  const Network& policy() const { return policy_; }
  const Network& q1() const { return q1_; }
  const Network& q2() const { return q2_; }
  const Network& q1_target() const { return q1_target_; }
  const Network& q2_target() const { return q2_target_; }

  double alpha() const { return std::exp(log_alpha_); }
  double& log_alpha() { return log_alpha_; }
  double target_entropy() const { return target_entropy_; }
  double gamma() const { return cfg_.gamma; }
  double tau() const { return cfg_.tau; }
  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }
  const SacConfig& config() const { return cfg_; }

  AdamState& policy_opt() { return policy_opt_; }
  AdamState& q1_opt() { return q1_opt_; }
  AdamState& q2_opt() { return q2_opt_; }
  AdamState& alpha_opt() { return alpha_opt_; }

 private:
  SacConfig cfg_;
  int obs_dim_, action_dim_;
  Network policy_, q1_, q2_, q1_target_, q2_target_;
  AdamState policy_opt_, q1_opt_, q2_opt_, alpha_opt_;
  double log_alpha_;
  double target_entropy_;
};

enum class ActionMode { kExplore, kEvaluate };

/// explore: reparameterized sample from the squashed Gaussian;
/// evaluate: tanh(mean), deterministic.
std::vector<double> select_action(SacAgent& agent, std::span<const double> obs,
                                  ActionMode mode, std::mt19937_64& rng);

/// Bootstrap actions for a batch of next-states plus the per-row entropy
/// term: log pi(a'|s') on policy rows, exactly zero on rows where the hook
/// returned a deterministic guide action.
struct HookResult {
  Matrix actions;
  Vector log_term;
};
using TargetPolicyHook =
    std::function<HookResult(const Matrix& s_next, int epoch)>;

/// The plain-SAC hook body: sample pi_theta for every row.
HookResult policy_hook(SacAgent& agent, const Matrix& s_next,
                       std::mt19937_64& rng);

/// y = r + gamma * (1-done) * (min(Q1t,Q2t)(s',a') - alpha * log_term).
Vector critic_targets(SacAgent& agent, const Batch& batch,
                      const HookResult& hook);

/// Sum of the two per-net mean squared errors against y; optionally
/// accumulates gradients into q1/q2.
double critic_loss(SacAgent& agent, const Batch& batch, const Vector& y,
                   bool accumulate_grad);

/// One critic gradient step with the strategy's target hook, then Polyak
/// updates of both target networks. Returns the loss.
double ape_update(SacAgent& agent, const Batch& batch,
                  const TargetPolicyHook& hook, int epoch);

/// Additive term in the actor objective, evaluated in policy-head space
/// (kept generic so the trust-region penalty can plug in).
/// Returns per-sample values and d(value)/d(head output).
using ActorPenalty =
    std::function<std::pair<Vector, Matrix>(const Matrix& s, const Matrix& head)>;

/// Core actor step: ascends mean(min Q(s, a~) - alpha log pi(a~|s)) plus the
/// optional penalty, with eps the frozen standard-normal draws. Returns the
/// negated objective; gradients are accumulated when requested but no
/// optimizer step is taken.
double actor_objective(SacAgent& agent, const Matrix& s, const Matrix& eps,
                       const ActorPenalty* penalty, bool accumulate_grad,
                       Vector* log_pi_out = nullptr);

/// One gradient ascent step of the standard entropy-regularized objective.
double api_update(SacAgent& agent, const Batch& batch, std::mt19937_64& rng);

/// Like api_update but with an additive penalty (used by PIG).
double actor_update(SacAgent& agent, const Batch& batch, std::mt19937_64& rng,
                    const ActorPenalty* penalty);

/// Auto-temperature step towards target entropy = -action_dim; alpha stays
/// positive through the log parameterization.
void alpha_update(SacAgent& agent, const Batch& batch, std::mt19937_64& rng);

// Agent checkpointing: a manifest plus the five networks and alpha,
// reusing the RLLG-NET block format.
void save_agent(const SacAgent& agent, const std::filesystem::path& path);
void load_agent_params(SacAgent& agent, const std::filesystem::path& path);

}  // namespace rllg
