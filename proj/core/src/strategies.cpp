#include "rllg/strategies.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rllg/rng.hpp"
#include "rllg/squashed_gaussian.hpp"

namespace rllg {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

Matrix hcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

}  // namespace

double Scheduler::factor(int epoch) const {
  if (epoch < 0) throw std::invalid_argument("Scheduler: negative epoch");
  const int kappa = epoch / period;
  switch (kind) {
    case Kind::kConstant:
      return 1.0;
    case Kind::kGeometricDecay:
      return std::pow(delta, kappa);
    case Kind::kGeometricRise:
      return 1.0 - std::pow(delta, kappa);
  }
  return 1.0;
}

void Scheduler::validate() const {
  if (period < 1) throw std::invalid_argument("Scheduler: period must be >= 1");
  if (beta0 < 0.0) throw std::invalid_argument("Scheduler: beta0 must be >= 0");
  if (kind != Kind::kConstant && (delta <= 0.0 || delta >= 1.0))
    throw std::invalid_argument("Scheduler: delta must be in (0,1)");
}

void StrategyConfig::validate() const {
  scheduler.validate();
  if (phi < 0.0) throw std::invalid_argument("StrategyConfig: phi must be >= 0");
  if (lambda_threshold < 0.0 || lambda_threshold > 1.0)
    throw std::invalid_argument(
        "StrategyConfig: lambda threshold must be in [0,1]");
}

StrategyKind strategy_kind_from_string(const std::string& s) {
  if (s == "sac") return StrategyKind::kSac;
  if (s == "sag") return StrategyKind::kSag;
  if (s == "naive-sag") return StrategyKind::kNaiveSag;
  if (s == "rg") return StrategyKind::kRg;
  if (s == "pig") return StrategyKind::kPig;
  if (s == "pag") return StrategyKind::kPag;
  if (s == "discrete-pag") return StrategyKind::kDiscretePag;
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::kSac: return "sac";
    case StrategyKind::kSag: return "sag";
    case StrategyKind::kNaiveSag: return "naive-sag";
    case StrategyKind::kRg: return "rg";
    case StrategyKind::kPig: return "pig";
    case StrategyKind::kPag: return "pag";
    case StrategyKind::kDiscretePag: return "discrete-pag";
  }
  return "sac";
}

Vector bc_metric_batch(const Matrix& head, const Matrix& guide_actions,
                       BcMetric metric, Matrix* d_head) {
  const Eigen::Index n = head.rows();
  const Eigen::Index d = head.cols() / 2;
  Vector out(n);
  if (d_head) d_head->setZero(n, 2 * d);

  if (metric == BcMetric::kNegSquaredDistance) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double m = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double t = std::tanh(head(i, j));
        const double diff = t - guide_actions(i, j);
        m -= diff * diff;
        if (d_head) (*d_head)(i, j) = -2.0 * diff * (1.0 - t * t);
      }
      out(i) = m;
    }
    return out;
  }

  // GuideLogDensity: squashed-Gaussian log-density of the guide action
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double g = std::clamp(guide_actions(i, j), -gaussian::kAtanhClip,
                                  gaussian::kAtanhClip);
      const double u = std::atanh(g);
      const double log_std = head(i, d + j);
      const double z = (u - head(i, j)) / std::exp(log_std);
      m += -0.5 * z * z - log_std - kHalfLog2Pi - log_one_minus_tanh_sq(u);
      if (d_head) {
        (*d_head)(i, j) = z / std::exp(log_std);
        (*d_head)(i, d + j) = -1.0 + z * z;
      }
    }
    out(i) = m;
  }
  return out;
}

double bc_metric_value(const SacAgent& agent, std::span<const double> s,
                       std::span<const double> guide_action, BcMetric metric) {
  Matrix sm(1, static_cast<Eigen::Index>(s.size()));
  for (Eigen::Index j = 0; j < sm.cols(); ++j) sm(0, j) = s[j];
  const Matrix head = agent.policy().infer(sm);
  Matrix g(1, static_cast<Eigen::Index>(guide_action.size()));
  for (Eigen::Index j = 0; j < g.cols(); ++j) g(0, j) = guide_action[j];
  return bc_metric_batch(head, g, metric)(0);
}

double rg_shaped_reward(double r, double lambda_s, double metric, int epoch,
                        const Scheduler& scheduler) {
  return r + scheduler.value(epoch) * lambda_s * metric;
}

Strategy::Strategy(StrategyConfig cfg, int obs_dim, int action_dim,
                   const SacConfig& net_cfg, std::uint64_t seed)
    : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.kind == StrategyKind::kPag) {
    std::vector<int> widths;
    widths.push_back(obs_dim + action_dim);
    for (int h : net_cfg.hidden) widths.push_back(h);
    widths.push_back(action_dim);
    perturbation_.emplace(
        mlp_spec(std::move(widths), net_cfg.policy_activation,
                 HeadKind::kBoundedTanh, 0, cfg_.phi),
        mix_seed(seed, 4));
    pert_opt_.emplace(perturbation_->params().size(), net_cfg.lr);
  }
}

bool Strategy::switches_actions() const {
  return cfg_.kind == StrategyKind::kSag ||
         cfg_.kind == StrategyKind::kNaiveSag ||
         cfg_.kind == StrategyKind::kPag ||
         cfg_.kind == StrategyKind::kDiscretePag;
}

std::vector<double> Strategy::guide_branch_action(const LocalGuide& guide,
                                                  std::span<const double> s,
                                                  int epoch) {
  std::vector<double> a = guide.action_map(s);
  if (cfg_.kind == StrategyKind::kPag) {
    std::vector<double> in(s.begin(), s.end());
    in.insert(in.end(), a.begin(), a.end());
    const std::vector<double> xi = perturbation_->infer(in);
    const double beta = cfg_.scheduler.value(epoch);
    for (std::size_t j = 0; j < a.size(); ++j)
      a[j] = std::clamp(a[j] + beta * xi[j], -1.0, 1.0);
  }
  return a;
}

std::vector<double> Strategy::compose_action(SacAgent& agent,
                                             const LocalGuide* guide,
                                             std::span<const double> s,
                                             int epoch, ActionMode mode,
                                             std::mt19937_64& rng) {
  if (guide && switches_actions() && guide->active(s)) {
    if (cfg_.kind == StrategyKind::kDiscretePag) {
      const double beta = std::clamp(cfg_.scheduler.value(epoch), 0.0, 1.0);
      const bool take_guide = mode == ActionMode::kEvaluate
                                  ? (1.0 - beta) >= 0.5
                                  : std::bernoulli_distribution(1.0 - beta)(rng);
      if (take_guide) return guide->action_map(s);
      return select_action(agent, s, mode, rng);
    }
    return guide_branch_action(*guide, s, epoch);
  }
  return select_action(agent, s, mode, rng);
}

HookResult Strategy::target_actions(SacAgent& agent, const LocalGuide* guide,
                                    const Matrix& s_next, int epoch,
                                    std::mt19937_64& rng) {
  // Sample the policy for every row first so the RNG stream does not depend
  // on how many rows the guide claims.
  HookResult h = policy_hook(agent, s_next, rng);
  const bool switched_target = cfg_.kind == StrategyKind::kSag ||
                               cfg_.kind == StrategyKind::kPag ||
                               cfg_.kind == StrategyKind::kDiscretePag;
  if (!guide || !switched_target) return h;

  std::vector<double> row(static_cast<std::size_t>(s_next.cols()));
  for (Eigen::Index i = 0; i < s_next.rows(); ++i) {
    for (Eigen::Index j = 0; j < s_next.cols(); ++j)
      row[static_cast<std::size_t>(j)] = s_next(i, j);
    if (guide->confidence(row) < cfg_.lambda_threshold) continue;
    if (cfg_.kind == StrategyKind::kDiscretePag) {
      const double beta = std::clamp(cfg_.scheduler.value(epoch), 0.0, 1.0);
      if (!std::bernoulli_distribution(1.0 - beta)(rng)) continue;
    }
    const std::vector<double> a = guide_branch_action(*guide, row, epoch);
    for (Eigen::Index j = 0; j < h.actions.cols(); ++j)
      h.actions(i, j) = a[static_cast<std::size_t>(j)];
    h.log_term(i) = 0.0;  // deterministic guide action: no entropy term
  }
  return h;
}

TargetPolicyHook Strategy::make_hook(SacAgent& agent, const LocalGuide* guide,
                                     std::mt19937_64& rng) {
  return [this, &agent, guide, &rng](const Matrix& s_next, int epoch) {
    return target_actions(agent, guide, s_next, epoch, rng);
  };
}

Vector Strategy::shaped_rewards(const SacAgent& agent, const LocalGuide& guide,
                                const Batch& batch, int epoch) const {
  const Matrix head = agent.policy().infer(batch.s);
  const Eigen::Index n = batch.size();
  const int d = agent.action_dim();
  Vector lambda(n);
  Matrix guide_a = Matrix::Zero(n, d);
  std::vector<double> row(static_cast<std::size_t>(batch.s.cols()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < batch.s.cols(); ++j)
      row[static_cast<std::size_t>(j)] = batch.s(i, j);
    lambda(i) = guide.confidence(row);
    if (lambda(i) > 0.0) {
      const std::vector<double> a = guide.action_map(row);
      for (int j = 0; j < d; ++j) guide_a(i, j) = a[static_cast<std::size_t>(j)];
    }
  }
  const Vector metric = bc_metric_batch(head, guide_a, cfg_.bc_metric);
  Vector shaped(n);
  for (Eigen::Index i = 0; i < n; ++i)
    shaped(i) =
        rg_shaped_reward(batch.r(i), lambda(i), metric(i), epoch, cfg_.scheduler);
  return shaped;
}

double Strategy::pig_policy_loss(SacAgent& agent, const Batch& batch,
                                 const LocalGuide& guide, int epoch,
                                 std::mt19937_64& rng) {
  const double beta = cfg_.scheduler.value(epoch);
  const BcMetric metric = cfg_.bc_metric;
  ActorPenalty penalty = [&guide, beta, metric, this](
                             const Matrix& s,
                             const Matrix& head) -> std::pair<Vector, Matrix> {
    const Eigen::Index n = s.rows();
    const Eigen::Index d = head.cols() / 2;
    Vector lambda(n);
    Matrix guide_a = Matrix::Zero(n, d);
    std::vector<double> row(static_cast<std::size_t>(s.cols()));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < s.cols(); ++j)
        row[static_cast<std::size_t>(j)] = s(i, j);
      lambda(i) = guide.confidence(row);
      if (lambda(i) > 0.0) {
        const std::vector<double> a = guide.action_map(row);
        for (Eigen::Index j = 0; j < d; ++j)
          guide_a(i, j) = a[static_cast<std::size_t>(j)];
      }
    }
    Matrix d_head;
    Vector m = bc_metric_batch(head, guide_a, metric, &d_head);
    Vector values = (beta * lambda.array() * m.array()).matrix();
    for (Eigen::Index i = 0; i < n; ++i)
      d_head.row(i) *= beta * lambda(i);
    return {values, d_head};
  };
  return actor_update(agent, batch, rng, &penalty);
}

double Strategy::perturbation_update(SacAgent& agent, const LocalGuide& guide,
                                     const Batch& batch, int epoch) {
  if (cfg_.kind != StrategyKind::kPag)
    throw std::logic_error("perturbation_update: strategy is not PAG");
  const Eigen::Index n = batch.size();
  const int d = agent.action_dim();
  const double beta = cfg_.scheduler.value(epoch);
  const double inv_n = 1.0 / static_cast<double>(n);

  // lambda weights; rows below the activation threshold contribute zero
  Vector weight(n);
  Matrix guide_a = Matrix::Zero(n, d);
  std::vector<double> row(static_cast<std::size_t>(batch.s.cols()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < batch.s.cols(); ++j)
      row[static_cast<std::size_t>(j)] = batch.s(i, j);
    const double lam = guide.confidence(row);
    weight(i) = lam >= cfg_.lambda_threshold ? lam : 0.0;
    if (weight(i) > 0.0) {
      const std::vector<double> a = guide.action_map(row);
      for (int j = 0; j < d; ++j) guide_a(i, j) = a[static_cast<std::size_t>(j)];
    }
  }

  const Matrix xi = perturbation_->forward(hcat(batch.s, guide_a));
  Matrix action(n, d);
  Matrix clip_mask(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      const double raw = guide_a(i, j) + beta * xi(i, j);
      action(i, j) = std::clamp(raw, -1.0, 1.0);
      clip_mask(i, j) = (raw > -1.0 && raw < 1.0) ? 1.0 : 0.0;
    }

  const Matrix xq = hcat(batch.s, action);
  const Vector q1v = agent.q1().forward(xq);
  const Vector q2v = agent.q2().forward(xq);
  const Vector qmin = q1v.cwiseMin(q2v);
  Matrix u1 = Matrix::Zero(n, 1), u2 = Matrix::Zero(n, 1);
  for (Eigen::Index i = 0; i < n; ++i)
    (q1v(i) <= q2v(i) ? u1 : u2)(i, 0) = 1.0;
  const Matrix g1 = agent.q1().backward(u1, /*accumulate_grad=*/false);
  const Matrix g2 = agent.q2().backward(u2, /*accumulate_grad=*/false);
  const Matrix g_a = g1.rightCols(d) + g2.rightCols(d);

  const double objective = (weight.array() * qmin.array()).mean();

  Matrix up(n, d);  // d(loss)/d(xi), loss = -objective
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      up(i, j) = -inv_n * weight(i) * g_a(i, j) * beta * clip_mask(i, j);
  perturbation_->backward(up, /*accumulate_grad=*/true);
  adam_step(*perturbation_, *pert_opt_);
  return -objective;
}

int discrete_compose(SacAgent& agent, const LocalGuide& guide,
                     std::span<const double> s, int epoch,
                     const Scheduler& scheduler, int n_actions,
                     double lambda_threshold, std::mt19937_64& rng) {
  if (guide.confidence(s) >= lambda_threshold) {
    const double beta = std::clamp(scheduler.value(epoch), 0.0, 1.0);
    if (std::bernoulli_distribution(1.0 - beta)(rng))
      return chain::action_bin(guide.action_map(s)[0], n_actions);
  }
  const std::vector<double> a =
      select_action(agent, s, ActionMode::kExplore, rng);
  return chain::action_bin(a[0], n_actions);
}

}  // namespace rllg
