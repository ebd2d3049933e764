#include "rllg/sac.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "rllg/rng.hpp"
#include "rllg/squashed_gaussian.hpp"

namespace rllg {

namespace {

MlpSpec policy_spec(int obs_dim, int action_dim, const SacConfig& cfg) {
  std::vector<int> widths;
  widths.push_back(obs_dim);
  for (int h : cfg.hidden) widths.push_back(h);
  widths.push_back(2 * action_dim);
  return mlp_spec(std::move(widths), cfg.policy_activation,
                  HeadKind::kSquashedGaussian, action_dim);
}

MlpSpec q_spec(int obs_dim, int action_dim, const SacConfig& cfg) {
  std::vector<int> widths;
  widths.push_back(obs_dim + action_dim);
  for (int h : cfg.hidden) widths.push_back(h);
  widths.push_back(1);
  return mlp_spec(std::move(widths), cfg.q_activation, HeadKind::kLinear);
}

Matrix hcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

}  // namespace

SacAgent::SacAgent(int obs_dim, int action_dim, const SacConfig& cfg,
                   std::uint64_t seed)
    : cfg_(cfg),
      obs_dim_(obs_dim),
      action_dim_(action_dim),
      policy_(policy_spec(obs_dim, action_dim, cfg), mix_seed(seed, 1)),
      q1_(q_spec(obs_dim, action_dim, cfg), mix_seed(seed, 2)),
      q2_(q_spec(obs_dim, action_dim, cfg), mix_seed(seed, 3)),
      q1_target_(q_spec(obs_dim, action_dim, cfg), mix_seed(seed, 2)),
      q2_target_(q_spec(obs_dim, action_dim, cfg), mix_seed(seed, 3)),
      policy_opt_(policy_.params().size(), cfg.lr),
      q1_opt_(q1_.params().size(), cfg.lr),
      q2_opt_(q2_.params().size(), cfg.lr),
      alpha_opt_(1, cfg.lr),
      log_alpha_(std::log(cfg.init_alpha)),
      target_entropy_(-static_cast<double>(action_dim)) {
  if (cfg.init_alpha <= 0.0)
    throw std::invalid_argument("SacAgent: init_alpha must be positive");
}

std::vector<double> select_action(SacAgent& agent, std::span<const double> obs,
                                  ActionMode mode, std::mt19937_64& rng) {
  const std::vector<double> head = agent.policy().infer(obs);
  const std::size_t d = head.size() / 2;
  std::vector<double> a(d);
  if (mode == ActionMode::kEvaluate) {
    for (std::size_t j = 0; j < d; ++j) a[j] = std::tanh(head[j]);
    return a;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    const double u = head[j] + std::exp(head[d + j]) * normal(rng);
    a[j] = std::clamp(std::tanh(u), -gaussian::kActionClip,
                      gaussian::kActionClip);
  }
  return a;
}

HookResult policy_hook(SacAgent& agent, const Matrix& s_next,
                       std::mt19937_64& rng) {
  const Matrix head = agent.policy().infer(s_next);
  const auto mean = gaussian::mean_of(head);
  const auto log_std = gaussian::log_std_of(head);
  gaussian::SampleBatch sb = gaussian::sample(mean, log_std, rng);
  HookResult out;
  out.actions = sb.a;
  out.log_term = gaussian::log_prob_from_u(sb.u, mean, log_std);
  return out;
}

Vector critic_targets(SacAgent& agent, const Batch& batch,
                      const HookResult& hook) {
  const Matrix x = hcat(batch.s_next, hook.actions);
  const Vector q1t = agent.q1_target().infer(x);
  const Vector q2t = agent.q2_target().infer(x);
  const Vector qmin = q1t.cwiseMin(q2t);
  const double alpha = agent.alpha();
  return (batch.r.array() +
          agent.gamma() * (1.0 - batch.done.array()) *
              (qmin.array() - alpha * hook.log_term.array()))
      .matrix();
}

double critic_loss(SacAgent& agent, const Batch& batch, const Vector& y,
                   bool accumulate_grad) {
  if (batch.size() == 0) throw std::invalid_argument("critic_loss: empty batch");
  const Matrix x = hcat(batch.s, batch.a);
  const double n = static_cast<double>(batch.size());
  const Vector q1v = agent.q1().forward(x);
  const Vector q2v = agent.q2().forward(x);
  const Vector e1 = q1v - y;
  const Vector e2 = q2v - y;
  if (accumulate_grad) {
    agent.q1().backward(Matrix(2.0 / n * e1), /*accumulate_grad=*/true);
    agent.q2().backward(Matrix(2.0 / n * e2), /*accumulate_grad=*/true);
  }
  return (e1.squaredNorm() + e2.squaredNorm()) / n;
}

double ape_update(SacAgent& agent, const Batch& batch,
                  const TargetPolicyHook& hook, int epoch) {
  if (batch.size() == 0) throw std::invalid_argument("ape_update: empty batch");
  const HookResult h = hook(batch.s_next, epoch);
  const Vector y = critic_targets(agent, batch, h);
  const double loss = critic_loss(agent, batch, y, /*accumulate_grad=*/true);
  adam_step(agent.q1(), agent.q1_opt());
  adam_step(agent.q2(), agent.q2_opt());
  soft_update(agent.q1_target(), agent.q1(), agent.tau());
  soft_update(agent.q2_target(), agent.q2(), agent.tau());
  return loss;
}

double actor_objective(SacAgent& agent, const Matrix& s, const Matrix& eps,
                       const ActorPenalty* penalty, bool accumulate_grad,
                       Vector* log_pi_out) {
  const Eigen::Index n = s.rows();
  const int d = agent.action_dim();
  const double alpha = agent.alpha();
  const double inv_n = 1.0 / static_cast<double>(n);

  const Matrix& head = agent.policy().forward(s);
  const auto mean = gaussian::mean_of(head);
  const auto log_std = gaussian::log_std_of(head);
  const gaussian::SampleBatch sb = gaussian::apply_eps(mean, log_std, eps);
  const Vector log_pi = gaussian::log_prob_from_u(sb.u, mean, log_std);
  if (log_pi_out) *log_pi_out = log_pi;

  // critic value of the reparameterized action and its action gradient
  const Matrix xq = hcat(s, sb.a);
  const Vector q1v = agent.q1().forward(xq);
  const Vector q2v = agent.q2().forward(xq);
  const Vector qmin = q1v.cwiseMin(q2v);
  Matrix u1 = Matrix::Zero(n, 1), u2 = Matrix::Zero(n, 1);
  for (Eigen::Index i = 0; i < n; ++i)
    (q1v(i) <= q2v(i) ? u1 : u2)(i, 0) = 1.0;
  const Matrix g1 = agent.q1().backward(u1, /*accumulate_grad=*/false);
  const Matrix g2 = agent.q2().backward(u2, /*accumulate_grad=*/false);
  const Matrix g_a = g1.rightCols(d) + g2.rightCols(d);

  double objective = (qmin.array() - alpha * log_pi.array()).mean();

  Vector pen_values;
  Matrix pen_grad;
  if (penalty) {
    std::tie(pen_values, pen_grad) = (*penalty)(s, head);
    objective += pen_values.mean();
  }

  if (accumulate_grad) {
    Matrix up(n, 2 * d);  // d(loss)/d(head), loss = -objective
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        const double a = sb.a(i, j);
        const double sigma_eps = std::exp(log_std(i, j)) * eps(i, j);
        const double d_mean = g_a(i, j) * (1.0 - a * a) - alpha * 2.0 * a;
        up(i, j) = -inv_n * d_mean;
        up(i, d + j) = -inv_n * (d_mean * sigma_eps + alpha);
      }
    }
    if (penalty) up -= inv_n * pen_grad;
    agent.policy().backward(up, /*accumulate_grad=*/true);
  }
  return -objective;
}

double actor_update(SacAgent& agent, const Batch& batch, std::mt19937_64& rng,
                    const ActorPenalty* penalty) {
  if (batch.size() == 0) throw std::invalid_argument("actor step: empty batch");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix eps(batch.size(), agent.action_dim());
  for (Eigen::Index i = 0; i < eps.rows(); ++i)
    for (Eigen::Index j = 0; j < eps.cols(); ++j) eps(i, j) = normal(rng);
  const double loss =
      actor_objective(agent, batch.s, eps, penalty, /*accumulate_grad=*/true);
  adam_step(agent.policy(), agent.policy_opt());
  return loss;
}

double api_update(SacAgent& agent, const Batch& batch, std::mt19937_64& rng) {
  return actor_update(agent, batch, rng, nullptr);
}

void alpha_update(SacAgent& agent, const Batch& batch, std::mt19937_64& rng) {
  const Matrix head = agent.policy().infer(batch.s);
  const auto mean = gaussian::mean_of(head);
  const auto log_std = gaussian::log_std_of(head);
  const gaussian::SampleBatch sb = gaussian::sample(mean, log_std, rng);
  const Vector log_pi = gaussian::log_prob_from_u(sb.u, mean, log_std);
  const double c = log_pi.mean() + agent.target_entropy();
  // J(alpha) = -alpha * c; descend d/d(log alpha) = -alpha * c
  const double g = -agent.alpha() * c;
  adam_step(std::span<double>(&agent.log_alpha(), 1),
            std::span<const double>(&g, 1), agent.alpha_opt());
}

void save_agent(const SacAgent& agent, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for write");
  f << "RLLG-AGENT v1\n";
  f.precision(17);
  f << "alpha " << agent.alpha() << '\n';
  f << "networks policy q1 q2 q1_target q2_target\n";
  write_network(agent.policy(), f);
  write_network(agent.q1(), f);
  write_network(agent.q2(), f);
  write_network(agent.q1_target(), f);
  write_network(agent.q2_target(), f);
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

void load_agent_params(SacAgent& agent, const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != "RLLG-AGENT v1")
    throw std::runtime_error("malformed checkpoint " + path.string() +
                             ": bad field 'header'");
  double alpha = 0.0;
  {
    std::string key;
    f >> key >> alpha;
    if (key != "alpha" || alpha <= 0.0)
      throw std::runtime_error("malformed checkpoint " + path.string() +
                               ": bad field 'alpha'");
    std::getline(f, line);
  }
  if (!std::getline(f, line) ||
      line != "networks policy q1 q2 q1_target q2_target")
    throw std::runtime_error("malformed checkpoint " + path.string() +
                             ": bad field 'networks'");
  Network* nets[] = {&agent.policy(), &agent.q1(), &agent.q2(),
                     &agent.q1_target(), &agent.q2_target()};
  for (Network* n : nets) {
    Network loaded = read_network(f, path.string());
    if (!(loaded.spec() == n->spec()))
      throw std::runtime_error("checkpoint " + path.string() +
                               " has incompatible network spec");
    n->params() = loaded.params();
  }
  agent.log_alpha() = std::log(alpha);
}

}  // namespace rllg
