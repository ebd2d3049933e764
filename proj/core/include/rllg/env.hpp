#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rllg {

struct EnvSpec {
  int obs_dim = 0;
  int action_dim = 0;
  double r_min = 0.0;
  double r_max = 0.0;
  int max_episode_steps = 1000;
  double gamma = 0.99;
};

struct StepResult {
  std::vector<double> next_obs;
  double reward = 0.0;
  bool terminal = false;
  bool violation = false;
};

/// Geometric / physical constants overridable per run; unknown keys throw.
using EnvOverrides = std::map<std::string, double>;

/// Analytically-stepped control environment. Actions live in [-1,1]^d; values
/// marginally outside (|a| <= 1 + 1e-6) are clipped, anything further throws.
/// Stepping a finished episode throws; reset() is deterministic given seed.
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual const std::string& id() const = 0;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(std::span<const double> action) = 0;
  /// True iff the observation lies in the catastrophic region.
  virtual bool violation_state(std::span<const double> obs) const = 0;
};

std::unique_ptr<Env> make_env(const std::string& env_id,
                              const EnvOverrides& overrides = {});
std::vector<std::string> env_ids();

/// Environments whose guides attract toward reward rather than repel from
/// danger; picks per-env defaults (schedulers, network sizes).
bool is_attractive_guide_env(const std::string& env_id);

/// Mapping between the chain MDP's discrete actions and the [-1,1] interval.
namespace chain {
int action_bin(double a, int n_actions);
double bin_center(int idx, int n_actions);
}  // namespace chain

}  // namespace rllg
