#include "rllg/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "rllg/discrete_mdp.hpp"

namespace rllg {

namespace {

constexpr double kActionSlack = 1e-6;

class ParamReader {
 public:
  explicit ParamReader(const EnvOverrides& overrides) : overrides_(overrides) {}
  double get(const std::string& key, double fallback) {
    seen_.push_back(key);
    auto it = overrides_.find(key);
    return it == overrides_.end() ? fallback : it->second;
  }
  /// Call after all get()s: rejects overrides the environment does not know.
  void finish(const std::string& env_id) const {
    for (const auto& [key, value] : overrides_) {
      (void)value;
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end())
        throw std::invalid_argument("unknown override '" + key + "' for env " +
                                    env_id);
    }
  }

 private:
  const EnvOverrides& overrides_;
  std::vector<std::string> seen_;
};

class EnvBase : public Env {
 public:
  const EnvSpec& spec() const override { return spec_; }
  const std::string& id() const override { return id_; }

 protected:
  void check_action(std::span<const double>& action,
                    std::vector<double>& clipped) const {
    if (static_cast<int>(action.size()) != spec_.action_dim)
      throw std::invalid_argument(id_ + ": action dimension mismatch");
    if (done_)
      throw std::logic_error(id_ + ": step() after terminal; call reset()");
    clipped.assign(action.begin(), action.end());
    for (double& a : clipped) {
      if (std::abs(a) > 1.0 + kActionSlack)
        throw std::invalid_argument(id_ + ": action outside [-1,1]");
      a = std::clamp(a, -1.0, 1.0);
    }
  }

  // Applies the shared episode bookkeeping to a freshly computed step.
  StepResult finish_step(std::vector<double> obs, double reward,
                         bool violation) {
    ++steps_;
    StepResult out;
    out.next_obs = std::move(obs);
    out.reward = reward;
    out.violation = violation;
    out.terminal = violation || steps_ >= spec_.max_episode_steps;
    done_ = out.terminal;
    return out;
  }

  void start_episode() {
    steps_ = 0;
    done_ = false;
  }

  EnvSpec spec_;
  std::string id_;
  int steps_ = 0;
  bool done_ = true;
};

// Damped unit-mass double integrator on the plane, semi-implicit Euler.
struct PointDynamics {
  double gain = 1.0;
  double damping = 0.1;
  double dt = 0.05;

  void step(double& px, double& py, double& vx, double& vy, double ax,
            double ay) const {
    vx += dt * (gain * ax - damping * vx);
    vy += dt * (gain * ay - damping * vy);
    px += dt * vx;
    py += dt * vy;
  }
};

// ---------------------------------------------------------------------------
// point-mass: sparse target-reaching in a walled square arena.

class PointMassEnv final : public EnvBase {
 public:
  explicit PointMassEnv(const EnvOverrides& overrides) {
    ParamReader p(overrides);
    arena_ = p.get("arena_half_extent", 0.3);
    target_radius_ = p.get("target_radius", 0.015);
    dyn_.gain = p.get("force_gain", 0.25);
    dyn_.damping = p.get("damping", 0.1);
    dyn_.dt = p.get("dt", 0.05);
    spec_.max_episode_steps = static_cast<int>(p.get("max_episode_steps", 1000));
    spec_.gamma = p.get("gamma", 0.99);
    p.finish("point-mass");
    id_ = "point-mass";
    spec_.obs_dim = 4;
    spec_.action_dim = 2;
    spec_.r_min = 0.0;
    spec_.r_max = 1.0;
  }

  std::vector<double> reset(std::uint64_t seed) override {
    start_episode();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.9 * arena_, 0.9 * arena_);
    px_ = u(rng);
    py_ = u(rng);
    vx_ = vy_ = 0.0;
    return obs();
  }

  StepResult step(std::span<const double> action) override {
    std::vector<double> a;
    check_action(action, a);
    dyn_.step(px_, py_, vx_, vy_, a[0], a[1]);
    clamp_wall(px_, vx_);
    clamp_wall(py_, vy_);
    const double reward = std::hypot(px_, py_) <= target_radius_ ? 1.0 : 0.0;
    return finish_step(obs(), reward, false);
  }

  bool violation_state(std::span<const double>) const override { return false; }

 private:
  void clamp_wall(double& pos, double& vel) const {
    if (pos > arena_) { pos = arena_; vel = 0.0; }
    if (pos < -arena_) { pos = -arena_; vel = 0.0; }
  }
  std::vector<double> obs() const { return {px_, py_, vx_, vy_}; }

  PointDynamics dyn_;
  double arena_ = 0.3, target_radius_ = 0.015;
  double px_ = 0, py_ = 0, vx_ = 0, vy_ = 0;
};

// ---------------------------------------------------------------------------
// safe-cartpole-swingup: swing up an unactuated pole; cart must stay inside
// |x| < x_max, entering the restricted area costs -1000 and ends the episode.

class CartpoleEnv final : public EnvBase {
 public:
  explicit CartpoleEnv(const EnvOverrides& overrides) {
    ParamReader p(overrides);
    cart_mass_ = p.get("cart_mass", 1.0);
    pole_mass_ = p.get("pole_mass", 0.1);
    length_ = p.get("pole_length", 1.0);
    gravity_ = p.get("gravity", 9.81);
    force_gain_ = p.get("force_gain", 10.0);
    cart_damping_ = p.get("cart_damping", 0.1);
    pole_damping_ = p.get("pole_damping", 0.0);
    x_max_ = p.get("x_max", 1.9);
    reset_noise_ = p.get("reset_noise", 0.05);
    dt_ = p.get("dt", 0.02);
    spec_.max_episode_steps = static_cast<int>(p.get("max_episode_steps", 1000));
    spec_.gamma = p.get("gamma", 0.99);
    p.finish("safe-cartpole-swingup");
    id_ = "safe-cartpole-swingup";
    spec_.obs_dim = 5;
    spec_.action_dim = 1;
    spec_.r_min = -1000.0;
    spec_.r_max = 1.0;
  }

  std::vector<double> reset(std::uint64_t seed) override {
    start_episode();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-reset_noise_, reset_noise_);
    x_ = 0.0;
    xdot_ = 0.0;
    theta_ = std::numbers::pi + u(rng);  // hanging down
    thetadot_ = u(rng);
    return obs();
  }

  StepResult step(std::span<const double> action) override {
    std::vector<double> a;
    check_action(action, a);
    integrate(force_gain_ * a[0]);
    const bool viol = std::abs(x_) >= x_max_;
    // upright, centered; the centering factor is zero in the restricted area
    double reward = 0.5 * (1.0 + std::cos(theta_)) *
                    std::max(0.0, 1.0 - std::abs(x_) / x_max_);
    if (viol) reward += -1000.0;
    return finish_step(obs(), reward, viol);
  }

  bool violation_state(std::span<const double> o) const override {
    return std::abs(o[0]) >= x_max_;
  }

 private:
  // theta measured from upright; pole is a point mass at distance length_.
  void integrate(double force) {
    const double m = pole_mass_, M = cart_mass_, l = length_, g = gravity_;
    const double s = std::sin(theta_), c = std::cos(theta_);
    const double xacc =
        (force - cart_damping_ * xdot_ + m * s * (l * thetadot_ * thetadot_ - g * c) +
         c * pole_damping_ * thetadot_ / l) /
        (M + m * s * s);
    const double thacc =
        (g * s - xacc * c) / l - pole_damping_ * thetadot_ / (m * l * l);
    xdot_ += dt_ * xacc;
    thetadot_ += dt_ * thacc;
    x_ += dt_ * xdot_;
    theta_ += dt_ * thetadot_;
  }

  std::vector<double> obs() const {
    return {x_, xdot_, std::cos(theta_), std::sin(theta_), thetadot_};
  }

  double cart_mass_, pole_mass_, length_, gravity_, force_gain_;
  double cart_damping_, pole_damping_, x_max_, reset_noise_, dt_;
  double x_ = 0, xdot_ = 0, theta_ = 0, thetadot_ = 0;
};

// ---------------------------------------------------------------------------
// point-circle: circulate around a ring of radius r_c; vertical barriers sit
// at the ring's horizontal extremities (|x| = r_c).

class PointCircleEnv final : public EnvBase {
 public:
  explicit PointCircleEnv(const EnvOverrides& overrides) {
    ParamReader p(overrides);
    circle_radius_ = p.get("circle_radius", 6.0);
    x_limit_ = p.get("x_limit", 6.0);
    y_wall_ = p.get("y_wall", 8.0);
    dyn_.gain = p.get("force_gain", 1.0);
    dyn_.damping = p.get("damping", 0.25);
    dyn_.dt = p.get("dt", 0.05);
    reset_noise_ = p.get("reset_noise", 0.1);
    spec_.max_episode_steps = static_cast<int>(p.get("max_episode_steps", 1000));
    spec_.gamma = p.get("gamma", 0.99);
    p.finish("point-circle");
    id_ = "point-circle";
    spec_.obs_dim = 4;
    spec_.action_dim = 2;
    spec_.r_min = -1100.0;
    spec_.r_max = 100.0;
  }

  std::vector<double> reset(std::uint64_t seed) override {
    start_episode();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-reset_noise_, reset_noise_);
    px_ = u(rng);
    py_ = u(rng);
    vx_ = vy_ = 0.0;
    return obs();
  }

  StepResult step(std::span<const double> action) override {
    std::vector<double> a;
    check_action(action, a);
    dyn_.step(px_, py_, vx_, vy_, a[0], a[1]);
    if (py_ > y_wall_) { py_ = y_wall_; vy_ = 0.0; }
    if (py_ < -y_wall_) { py_ = -y_wall_; vy_ = 0.0; }
    const bool viol = std::abs(px_) >= x_limit_;
    const double dist_to_ring = std::abs(std::hypot(px_, py_) - circle_radius_);
    double reward = (-py_ * vx_ + px_ * vy_) / (1.0 + dist_to_ring);
    if (viol) reward += -1000.0;
    return finish_step(obs(), reward, viol);
  }

  bool violation_state(std::span<const double> o) const override {
    return std::abs(o[0]) >= x_limit_;
  }

 private:
  std::vector<double> obs() const { return {px_, py_, vx_, vy_}; }

  PointDynamics dyn_;
  double circle_radius_, x_limit_, y_wall_, reset_noise_;
  double px_ = 0, py_ = 0, vx_ = 0, vy_ = 0;
};

// ---------------------------------------------------------------------------
// point-reach: reach a goal while avoiding 5 obstacle discs. Observation is
// (position, velocity, goal, all obstacle centers) so guides can stay pure
// functions of the observation.

class PointReachEnv final : public EnvBase {
 public:
  explicit PointReachEnv(const EnvOverrides& overrides) {
    ParamReader p(overrides);
    goal_x_ = p.get("goal_x", 7.0);
    goal_y_ = p.get("goal_y", 7.0);
    goal_radius_ = p.get("goal_radius", 0.5);
    goal_bonus_ = p.get("goal_bonus", 100.0);
    obstacle_radius_ = p.get("obstacle_radius", 0.8);
    arena_lo_ = p.get("arena_low", -2.0);
    arena_hi_ = p.get("arena_high", 9.0);
    dyn_.gain = p.get("force_gain", 1.0);
    dyn_.damping = p.get("damping", 0.25);
    dyn_.dt = p.get("dt", 0.05);
    reset_noise_ = p.get("reset_noise", 0.3);
    spec_.max_episode_steps = static_cast<int>(p.get("max_episode_steps", 1000));
    spec_.gamma = p.get("gamma", 0.99);
    p.finish("point-reach");
    obstacles_ = {{4.2, 1.2}, {1.2, 4.2}, {3.4, 3.4}, {5.8, 3.2}, {3.2, 5.8}};
    id_ = "point-reach";
    spec_.obs_dim = 4 + 2 + 2 * static_cast<int>(obstacles_.size());
    spec_.action_dim = 2;
    spec_.r_min = -1020.0;
    spec_.r_max = 100.0;
  }

  std::vector<double> reset(std::uint64_t seed) override {
    start_episode();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-reset_noise_, reset_noise_);
    px_ = u(rng);
    py_ = u(rng);
    vx_ = vy_ = 0.0;
    return obs();
  }

  StepResult step(std::span<const double> action) override {
    std::vector<double> a;
    check_action(action, a);
    dyn_.step(px_, py_, vx_, vy_, a[0], a[1]);
    clamp_wall(px_, vx_);
    clamp_wall(py_, vy_);
    bool viol = false;
    for (const auto& [ox, oy] : obstacles_)
      if (std::hypot(px_ - ox, py_ - oy) <= obstacle_radius_) viol = true;
    const double dist_goal = std::hypot(px_ - goal_x_, py_ - goal_y_);
    const bool reached = dist_goal <= goal_radius_;
    double reward = -dist_goal;
    if (reached) reward += goal_bonus_;
    if (viol) reward += -1000.0;
    StepResult out = finish_step(obs(), reward, viol);
    if (reached) {
      out.terminal = true;
      done_ = true;
    }
    return out;
  }

  bool violation_state(std::span<const double> o) const override {
    const std::size_t n = (o.size() - 6) / 2;
    for (std::size_t i = 0; i < n; ++i)
      if (std::hypot(o[0] - o[6 + 2 * i], o[1] - o[7 + 2 * i]) <=
          obstacle_radius_)
        return true;
    return false;
  }

 private:
  void clamp_wall(double& pos, double& vel) const {
    if (pos > arena_hi_) { pos = arena_hi_; vel = 0.0; }
    if (pos < arena_lo_) { pos = arena_lo_; vel = 0.0; }
  }

  std::vector<double> obs() const {
    std::vector<double> o = {px_, py_, vx_, vy_, goal_x_, goal_y_};
    for (const auto& [ox, oy] : obstacles_) {
      o.push_back(ox);
      o.push_back(oy);
    }
    return o;
  }

  PointDynamics dyn_;
  double goal_x_, goal_y_, goal_radius_, goal_bonus_, obstacle_radius_;
  double arena_lo_, arena_hi_, reset_noise_;
  std::vector<std::pair<double, double>> obstacles_;
  double px_ = 0, py_ = 0, vx_ = 0, vy_ = 0;
};

// ---------------------------------------------------------------------------
// chain-mdp: the tabular chain exposed through the continuous interface with
// one-hot observations; the scalar action in [-1,1] is binned uniformly.

class ChainMdpEnv final : public EnvBase {
 public:
  explicit ChainMdpEnv(const EnvOverrides& overrides) {
    ParamReader p(overrides);
    const int n_states = static_cast<int>(p.get("n_states", 5));
    const int n_actions = static_cast<int>(p.get("n_actions", 3));
    const double slip = p.get("slip", 0.1);
    spec_.gamma = p.get("gamma", 0.9);
    spec_.max_episode_steps = static_cast<int>(p.get("max_episode_steps", 50));
    p.finish("chain-mdp");
    mdp_ = make_chain_mdp(n_states, n_actions, slip, spec_.gamma);
    id_ = "chain-mdp";
    spec_.obs_dim = n_states;
    spec_.action_dim = 1;
    spec_.r_min = 0.0;
    spec_.r_max = 1.0;
  }

  std::vector<double> reset(std::uint64_t seed) override {
    start_episode();
    rng_.seed(seed);
    state_ = 0;
    return obs();
  }

  StepResult step(std::span<const double> action) override {
    std::vector<double> a;
    check_action(action, a);
    const int idx = chain::action_bin(a[0], mdp_.n_actions);
    const double reward = mdp_.reward(state_, idx);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double mass = u(rng_);
    int next = mdp_.n_states - 1;
    for (int sn = 0; sn < mdp_.n_states; ++sn) {
      mass -= mdp_.P[idx](state_, sn);
      if (mass <= 0.0) { next = sn; break; }
    }
    state_ = next;
    return finish_step(obs(), reward, false);
  }

  bool violation_state(std::span<const double>) const override { return false; }

 private:
  std::vector<double> obs() const {
    std::vector<double> o(mdp_.n_states, 0.0);
    o[static_cast<std::size_t>(state_)] = 1.0;
    return o;
  }

  DiscreteMdp mdp_;
  std::mt19937_64 rng_;
  int state_ = 0;
};

}  // namespace

namespace chain {

int action_bin(double a, int n_actions) {
  const int idx = static_cast<int>(std::floor((a + 1.0) / 2.0 * n_actions));
  return std::clamp(idx, 0, n_actions - 1);
}

double bin_center(int idx, int n_actions) {
  return -1.0 + (2.0 * idx + 1.0) / n_actions;
}

}  // namespace chain

std::unique_ptr<Env> make_env(const std::string& env_id,
                              const EnvOverrides& overrides) {
  if (env_id == "point-mass") return std::make_unique<PointMassEnv>(overrides);
  if (env_id == "safe-cartpole-swingup")
    return std::make_unique<CartpoleEnv>(overrides);
  if (env_id == "point-circle")
    return std::make_unique<PointCircleEnv>(overrides);
  if (env_id == "point-reach") return std::make_unique<PointReachEnv>(overrides);
  if (env_id == "chain-mdp") return std::make_unique<ChainMdpEnv>(overrides);
  throw std::invalid_argument("unknown environment id '" + env_id + "'");
}

std::vector<std::string> env_ids() {
  return {"point-mass", "safe-cartpole-swingup", "point-circle", "point-reach",
          "chain-mdp"};
}

bool is_attractive_guide_env(const std::string& env_id) {
  return env_id == "point-mass" || env_id == "chain-mdp";
}

}  // namespace rllg
