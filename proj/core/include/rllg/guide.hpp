#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rllg/env.hpp"

namespace rllg {

/// Deterministic local guide: an action map a_g(s) valid inside a region of
/// the state space, exposed with a confidence function lambda(s) in [0,1] and
/// an activation threshold. Both functions are pure in the observation; build
/// one guide per run when running in parallel.
struct LocalGuide {
  std::string id;
  std::function<std::vector<double>(std::span<const double>)> action_map;
  std::function<double(std::span<const double>)> confidence;
  double threshold = 0.5;

  bool active(std::span<const double> obs) const {
    return confidence(obs) >= threshold;
  }
};

std::vector<double> guide_action(const LocalGuide& g,
                                 std::span<const double> obs);
double guide_confidence(const LocalGuide& g, std::span<const double> obs);

/// Scripted emergency procedures / heuristics keyed by environment id
/// (safe-cartpole-swingup, point-circle, point-reach, chain-mdp).
LocalGuide make_scripted_guide(const std::string& env_id,
                               const EnvOverrides& overrides = {});

/// Loads an RLLG-NET checkpoint with a SquashedGaussian head; the guide action
/// is tanh(mean) of the loaded policy. Confidence comes from the caller.
LocalGuide load_learned_guide(
    const std::filesystem::path& checkpoint,
    std::function<double(std::span<const double>)> confidence,
    double threshold = 0.5);

/// Learned point-mass guide: lambda is 1 until the agent is inside the big
/// goal disc of the guide's training task.
LocalGuide make_point_mass_guide(const std::filesystem::path& checkpoint,
                                 const EnvOverrides& overrides = {});

/// Concatenation of guides relevant in non-overlapping regions; first active
/// guide wins. Disjointness is asserted on the probe states (throws if two
/// guides claim one probe).
LocalGuide concat_guides(std::vector<LocalGuide> guides,
                         std::span<const std::vector<double>> probe_states);

}  // namespace rllg
