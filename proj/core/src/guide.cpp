#include "rllg/guide.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "rllg/mlp.hpp"
#include "rllg/squashed_gaussian.hpp"

namespace rllg {

std::vector<double> guide_action(const LocalGuide& g,
                                 std::span<const double> obs) {
  return g.action_map(obs);
}

double guide_confidence(const LocalGuide& g, std::span<const double> obs) {
  return g.confidence(obs);
}

namespace {

double lookup(const EnvOverrides& o, const std::string& key, double fallback) {
  auto it = o.find(key);
  return it == o.end() ? fallback : it->second;
}

LocalGuide cartpole_guide(const EnvOverrides& overrides) {
  const double activation = lookup(overrides, "guide_activation_x", 0.2);
  LocalGuide g;
  g.id = "cartpole-center";
  // maximum force towards the center as soon as the cart leaves |x| < 0.2
  g.action_map = [](std::span<const double> obs) -> std::vector<double> {
    return {obs[0] > 0.0 ? -1.0 : 1.0};
  };
  g.confidence = [activation](std::span<const double> obs) {
    return std::abs(obs[0]) >= activation ? 1.0 : 0.0;
  };
  return g;
}

LocalGuide circle_guide(const EnvOverrides& overrides) {
  const double activation = lookup(overrides, "guide_activation_x", 2.0);
  LocalGuide g;
  g.id = "circle-center";
  g.action_map = [](std::span<const double> obs) -> std::vector<double> {
    return {obs[0] > 0.0 ? -1.0 : 1.0, 0.0};
  };
  g.confidence = [activation](std::span<const double> obs) {
    return std::abs(obs[0]) >= activation ? 1.0 : 0.0;
  };
  return g;
}

// Pushes along the diagonal of the quadrant of the agent relative to the
// nearest activating obstacle; overlaps tie-break towards the smaller index.
LocalGuide reach_guide(const EnvOverrides& overrides) {
  const double activation = lookup(overrides, "guide_activation_radius", 3.0);
  LocalGuide g;
  g.id = "reach-obstacle-avoid";
  auto nearest = [activation](std::span<const double> obs) -> int {
    const std::size_t n = (obs.size() - 6) / 2;
    int best = -1;
    double best_d = activation;
    for (std::size_t i = 0; i < n; ++i) {
      const double d =
          std::hypot(obs[0] - obs[6 + 2 * i], obs[1] - obs[7 + 2 * i]);
      if (d < best_d || (best < 0 && d <= activation)) {
        best = static_cast<int>(i);
        best_d = d;
      }
    }
    return best;
  };
  g.action_map = [nearest](std::span<const double> obs) -> std::vector<double> {
    const int i = nearest(obs);
    if (i < 0) return {0.0, 0.0};  // outside every activation circle
    const double dx = obs[0] - obs[6 + 2 * static_cast<std::size_t>(i)];
    const double dy = obs[1] - obs[7 + 2 * static_cast<std::size_t>(i)];
    return {dx >= 0.0 ? 1.0 : -1.0, dy >= 0.0 ? 1.0 : -1.0};
  };
  g.confidence = [nearest](std::span<const double> obs) {
    return nearest(obs) >= 0 ? 1.0 : 0.0;
  };
  return g;
}

// Attractive chain guide: always step towards the rewarding end of the chain.
LocalGuide chain_guide(const EnvOverrides& overrides) {
  const int n_actions = static_cast<int>(lookup(overrides, "n_actions", 3));
  LocalGuide g;
  g.id = "chain-right";
  g.action_map = [n_actions](std::span<const double>) -> std::vector<double> {
    return {chain::bin_center(n_actions - 1, n_actions)};
  };
  g.confidence = [](std::span<const double> obs) {
    return obs.back() > 0.5 ? 0.0 : 1.0;  // hand over in the terminal state
  };
  return g;
}

}  // namespace

LocalGuide make_scripted_guide(const std::string& env_id,
                               const EnvOverrides& overrides) {
  if (env_id == "safe-cartpole-swingup") return cartpole_guide(overrides);
  if (env_id == "point-circle") return circle_guide(overrides);
  if (env_id == "point-reach") return reach_guide(overrides);
  if (env_id == "chain-mdp") return chain_guide(overrides);
  throw std::invalid_argument("no scripted guide for env '" + env_id + "'");
}

LocalGuide load_learned_guide(
    const std::filesystem::path& checkpoint,
    std::function<double(std::span<const double>)> confidence,
    double threshold) {
  auto net = std::make_shared<const Network>(load_network(checkpoint));
  if (net->spec().head != HeadKind::kSquashedGaussian)
    throw std::runtime_error("malformed checkpoint " + checkpoint.string() +
                             ": bad field 'head' (learned guides need a "
                             "squashed-gaussian policy)");
  LocalGuide g;
  g.id = "learned:" + checkpoint.string();
  g.action_map = [net](std::span<const double> obs) -> std::vector<double> {
    const std::vector<double> head = net->infer(obs);
    const std::size_t d = head.size() / 2;
    std::vector<double> a(d);
    for (std::size_t j = 0; j < d; ++j) a[j] = std::tanh(head[j]);
    return a;
  };
  g.confidence = std::move(confidence);
  g.threshold = threshold;
  return g;
}

LocalGuide make_point_mass_guide(const std::filesystem::path& checkpoint,
                                 const EnvOverrides& overrides) {
  const double big_goal = lookup(overrides, "guide_goal_radius", 0.1);
  auto conf = [big_goal](std::span<const double> obs) {
    return std::hypot(obs[0], obs[1]) > big_goal ? 1.0 : 0.0;
  };
  LocalGuide g = load_learned_guide(checkpoint, conf);
  g.id = "point-mass-medium";
  return g;
}

LocalGuide concat_guides(std::vector<LocalGuide> guides,
                         std::span<const std::vector<double>> probe_states) {
  if (guides.empty())
    throw std::invalid_argument("concat_guides: need at least one guide");
  for (const auto& s : probe_states) {
    int active = 0;
    for (const auto& g : guides)
      if (g.active(s)) ++active;
    if (active > 1)
      throw std::invalid_argument(
          "concat_guides: guide regions overlap on a probe state");
  }
  auto shared = std::make_shared<std::vector<LocalGuide>>(std::move(guides));
  LocalGuide out;
  out.id = "concat";
  out.threshold = (*shared)[0].threshold;
  out.action_map = [shared](std::span<const double> obs) {
    for (const auto& g : *shared)
      if (g.active(obs)) return g.action_map(obs);
    return (*shared)[0].action_map(obs);
  };
  out.confidence = [shared](std::span<const double> obs) {
    for (const auto& g : *shared)
      if (g.active(obs)) return g.confidence(obs);
    double best = 0.0;
    for (const auto& g : *shared) best = std::max(best, g.confidence(obs));
    return best;
  };
  return out;
}

}  // namespace rllg
