#include "rllg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rllg/config.hpp"
#include "rllg/guide.hpp"
#include "rllg/rng.hpp"
#include "rllg/sac.hpp"
#include "rllg/strategies.hpp"

namespace rllg {

namespace {

bool is_safety_env(const std::string& env_id) {
  return env_id == "safe-cartpole-swingup" || env_id == "point-circle" ||
         env_id == "point-reach";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kReLU;
  if (s == "tanh") return Activation::kTanH;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

Scheduler::Kind schedule_from_string(const std::string& s) {
  if (s == "const") return Scheduler::Kind::kConstant;
  if (s == "decay") return Scheduler::Kind::kGeometricDecay;
  if (s == "rise") return Scheduler::Kind::kGeometricRise;
  throw std::invalid_argument("unknown schedule '" + s + "'");
}

BcMetric bc_metric_from_string(const std::string& s) {
  if (s == "distance") return BcMetric::kNegSquaredDistance;
  if (s == "log-density") return BcMetric::kGuideLogDensity;
  throw std::invalid_argument("unknown bc metric '" + s + "'");
}

StrategyConfig strategy_config_of(const RunConfig& cfg) {
  StrategyConfig sc;
  sc.kind = strategy_kind_from_string(cfg.agent);
  sc.scheduler.kind = schedule_from_string(cfg.schedule);
  sc.scheduler.beta0 = cfg.beta0;
  sc.scheduler.delta = cfg.delta;
  sc.scheduler.period = cfg.period;
  sc.phi = cfg.phi;
  sc.bc_metric = bc_metric_from_string(cfg.bc_metric);
  sc.lambda_threshold = cfg.lambda_threshold;
  sc.validate();
  return sc;
}

SacConfig sac_config_of(const RunConfig& cfg) {
  SacConfig sc;
  sc.hidden = cfg.hidden;
  sc.policy_activation = activation_from_string(cfg.policy_activation);
  sc.q_activation = activation_from_string(cfg.q_activation);
  sc.lr = cfg.lr;
  sc.gamma = cfg.gamma;
  sc.tau = cfg.tau;
  sc.init_alpha = cfg.init_alpha;
  return sc;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

RunConfig resolve_run_config(RunConfig cfg) {
  const auto env = make_env(cfg.env_id, cfg.env_overrides);  // validates both
  const StrategyKind kind = strategy_kind_from_string(cfg.agent);
  const bool attractive = is_attractive_guide_env(cfg.env_id);

  if (cfg.hidden.empty())
    cfg.hidden = is_safety_env(cfg.env_id) ? std::vector<int>{32, 32}
                                           : std::vector<int>{64, 64};
  if (cfg.q_activation.empty())
    cfg.q_activation =
        cfg.env_id == "safe-cartpole-swingup" ? "tanh" : "relu";
  if (cfg.gamma < 0.0) cfg.gamma = env->spec().gamma;

  if (cfg.schedule.empty()) {
    switch (kind) {
      case StrategyKind::kPag:
        cfg.schedule = attractive ? "const" : "rise";
        break;
      case StrategyKind::kDiscretePag:
        cfg.schedule = "rise";
        break;
      case StrategyKind::kPig:
      case StrategyKind::kRg:
        cfg.schedule = attractive ? "decay" : "const";
        break;
      default:
        cfg.schedule = "const";
        break;
    }
  }
  if (cfg.beta0 < 0.0) {
    if (kind == StrategyKind::kPig || kind == StrategyKind::kRg)
      cfg.beta0 = attractive ? 1.0 : 0.5;
    else
      cfg.beta0 = 1.0;
  }

  if (cfg.epochs < 1 || cfg.steps_per_epoch < 1 || cfg.updates_per_epoch < 0 ||
      cfg.eval_trials < 1 || cfg.batch_size < 1 || cfg.buffer_capacity < 1)
    throw std::invalid_argument("RunConfig: counts must be positive");
  if (kind != StrategyKind::kSac && cfg.env_id == "point-mass" &&
      cfg.guide_checkpoint.empty())
    throw std::invalid_argument(
        "point-mass guides are learned: set guide_checkpoint");

  // config must round-trip, so touch the remaining derived fields now
  strategy_config_of(cfg);
  sac_config_of(cfg);
  return cfg;
}

namespace {

struct RunContext {
  std::unique_ptr<Env> env;
  std::unique_ptr<Env> eval_env;
  std::optional<LocalGuide> guide;
};

RunContext build_context(const RunConfig& cfg, StrategyKind kind) {
  RunContext ctx;
  ctx.env = make_env(cfg.env_id, cfg.env_overrides);
  ctx.eval_env = make_env(cfg.env_id, cfg.env_overrides);
  if (kind == StrategyKind::kSac) return ctx;
  if (cfg.env_id == "point-mass")
    ctx.guide = make_point_mass_guide(cfg.guide_checkpoint, cfg.env_overrides);
  else
    ctx.guide = make_scripted_guide(cfg.env_id, cfg.env_overrides);
  ctx.guide->threshold = cfg.lambda_threshold;
  return ctx;
}

}  // namespace

SeedRun run_training(const RunConfig& raw_cfg, const std::string& label) {
  const RunConfig cfg = resolve_run_config(raw_cfg);
  const StrategyKind kind = strategy_kind_from_string(cfg.agent);
  RunContext ctx = build_context(cfg, kind);
  const EnvSpec& es = ctx.env->spec();

  SacConfig agent_cfg = sac_config_of(cfg);
  SacAgent agent(es.obs_dim, es.action_dim, agent_cfg, mix_seed(cfg.seed, 100));
  Strategy strategy(strategy_config_of(cfg), es.obs_dim, es.action_dim,
                    agent_cfg, mix_seed(cfg.seed, 100));
  const LocalGuide* guide = ctx.guide ? &*ctx.guide : nullptr;

  ReplayBuffer buffer(cfg.buffer_capacity);
  std::mt19937_64 action_rng(mix_seed(cfg.seed, 200));
  std::mt19937_64 batch_rng(mix_seed(cfg.seed, 300));

  SeedRun result;
  result.label = label.empty() ? cfg.agent : label;
  result.config = cfg;

  std::uint64_t episode = 0;
  std::vector<double> obs = ctx.env->reset(mix_seed(cfg.seed, mix_seed(400, episode)));
  const int snapshot_epoch =
      cfg.snapshot_fraction > 0.0
          ? static_cast<int>(std::ceil(cfg.snapshot_fraction * cfg.epochs))
          : -1;

  for (int k = 0; k < cfg.epochs; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = k;

    // -- collect
    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      const std::vector<double> a = strategy.compose_action(
          agent, guide, obs, k, ActionMode::kExplore, action_rng);
      StepResult sr = ctx.env->step(a);
      if (sr.violation) ++rec.train_violations;
      buffer.push({obs, a, sr.reward, sr.next_obs, sr.terminal});
      if (sr.terminal) {
        ++episode;
        obs = ctx.env->reset(mix_seed(cfg.seed, mix_seed(400, episode)));
      } else {
        obs = std::move(sr.next_obs);
      }
    }

    // -- update
    TargetPolicyHook hook = strategy.make_hook(agent, guide, action_rng);
    for (int u = 0; u < cfg.updates_per_epoch; ++u) {
      const auto idx = buffer.sample_indices(
          static_cast<std::size_t>(cfg.batch_size), batch_rng);
      Batch batch = assemble_batch(buffer, idx);
      if (kind == StrategyKind::kRg)
        batch.r = strategy.shaped_rewards(agent, *guide, batch, k);
      ape_update(agent, batch, hook, k);
      if (kind == StrategyKind::kPig)
        strategy.pig_policy_loss(agent, batch, *guide, k, action_rng);
      else
        api_update(agent, batch, action_rng);
      if (kind == StrategyKind::kPag)
        strategy.perturbation_update(agent, *guide, batch, k);
      alpha_update(agent, batch, action_rng);
    }

    // -- evaluate (never fed back into the buffer)
    for (int trial = 0; trial < cfg.eval_trials; ++trial) {
      std::vector<double> eobs = ctx.eval_env->reset(
          mix_seed(cfg.seed, mix_seed(500, mix_seed(k, trial))));
      double ret = 0.0;
      while (true) {
        const std::vector<double> a = strategy.compose_action(
            agent, guide, eobs, k, ActionMode::kEvaluate, action_rng);
        StepResult sr = ctx.eval_env->step(a);
        ret += sr.reward;
        if (sr.violation) ++rec.eval_violations;
        if (sr.terminal) break;
        eobs = std::move(sr.next_obs);
      }
      rec.eval_returns.push_back(ret);
    }
    rec.mean_return =
        std::accumulate(rec.eval_returns.begin(), rec.eval_returns.end(), 0.0) /
        static_cast<double>(cfg.eval_trials);
    rec.wallclock_s =
        cfg.timing
            ? std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count()
            : 0.0;
    result.epochs.push_back(std::move(rec));

    if (k + 1 == snapshot_epoch && !cfg.out_dir.empty()) {
      std::filesystem::create_directories(cfg.out_dir);
      save_network(agent.policy(),
                   std::filesystem::path(cfg.out_dir) / "guide_snapshot.ckpt");
    }
  }

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    save_agent(agent, std::filesystem::path(cfg.out_dir) / "agent_final.ckpt");
  }
  return result;
}

std::vector<SeedRun> run_grid(const std::vector<SeedRun>& prototypes,
                              int jobs) {
  std::vector<SeedRun> results(prototypes.size());
  std::atomic<std::size_t> next{0};
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(prototypes.size())));
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) {
    workers.emplace_back([&, t] {
      try {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= prototypes.size()) break;
          results[i] = run_training(prototypes[i].config, prototypes[i].label);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

double normalized_auc(std::span<const double> series, double cr_star) {
  if (series.empty())
    throw std::invalid_argument("normalized_auc: need at least one epoch");
  if (cr_star == 0.0)
    throw std::invalid_argument("normalized_auc: cr_star of zero is undefined");
  const double total = std::accumulate(series.begin(), series.end(), 0.0);
  return total / (static_cast<double>(series.size()) * cr_star);
}

std::vector<double> exp_smooth(std::span<const double> series, double w) {
  if (series.empty())
    throw std::invalid_argument("exp_smooth: empty series");
  if (w < 0.0 || w >= 1.0)
    throw std::invalid_argument("exp_smooth: weight must be in [0,1)");
  std::vector<double> out(series.size());
  out[0] = series[0];
  for (std::size_t t = 1; t < series.size(); ++t)
    out[t] = w * out[t - 1] + (1.0 - w) * series[t];
  return out;
}

ResultsTable aggregate(std::vector<SeedRun> runs) {
  ResultsTable table;
  table.runs = std::move(runs);
  if (table.runs.empty()) return table;

  table.epochs = static_cast<int>(table.runs.front().epochs.size());
  for (const SeedRun& r : table.runs)
    if (static_cast<int>(r.epochs.size()) != table.epochs)
      throw std::invalid_argument("aggregate: ragged epoch counts");

  table.cr_star = table.runs.front().epochs.front().mean_return;
  for (const SeedRun& r : table.runs)
    for (const EpochRecord& e : r.epochs)
      table.cr_star = std::max(table.cr_star, e.mean_return);

  std::vector<std::string> order;
  for (const SeedRun& r : table.runs)
    if (std::find(order.begin(), order.end(), r.label) == order.end())
      order.push_back(r.label);

  for (const std::string& label : order) {
    AgentSummary s;
    s.label = label;
    std::vector<const SeedRun*> members;
    for (const SeedRun& r : table.runs)
      if (r.label == label) members.push_back(&r);
    for (const SeedRun* r : members) s.seeds.push_back(r->config.seed);

    s.mean_return.resize(static_cast<std::size_t>(table.epochs));
    s.half_std.resize(static_cast<std::size_t>(table.epochs));
    const double n = static_cast<double>(members.size());
    for (int k = 0; k < table.epochs; ++k) {
      double sum = 0.0, sumsq = 0.0;
      for (const SeedRun* r : members) {
        const double v = r->epochs[static_cast<std::size_t>(k)].mean_return;
        sum += v;
        sumsq += v * v;
      }
      const double mean = sum / n;
      const double var = std::max(0.0, sumsq / n - mean * mean);  // population
      s.mean_return[static_cast<std::size_t>(k)] = mean;
      s.half_std[static_cast<std::size_t>(k)] = 0.5 * std::sqrt(var);
    }

    for (const SeedRun* r : members) {
      std::vector<double> series;
      for (const EpochRecord& e : r->epochs) series.push_back(e.mean_return);
      s.auc_per_seed.push_back(normalized_auc(series, table.cr_star));
    }
    double sum = 0.0, sumsq = 0.0;
    for (double a : s.auc_per_seed) {
      sum += a;
      sumsq += a * a;
    }
    s.auc_mean = sum / n;
    s.auc_half_std =
        0.5 * std::sqrt(std::max(0.0, sumsq / n - s.auc_mean * s.auc_mean));
    table.agents.push_back(std::move(s));
  }
  return table;
}

namespace {

void write_epochs_csv(const std::vector<const SeedRun*>& runs,
                      const std::filesystem::path& file) {
  std::ofstream f(file);
  if (!f) throw std::runtime_error("cannot open " + file.string() + " for write");
  const int trials = runs.empty() ? 0 : runs.front()->config.eval_trials;
  f << "seed,epoch,mean_return";
  for (int t = 1; t <= trials; ++t) f << ",ret_" << t;
  f << ",violations,eval_violations,wallclock_s\n";
  for (const SeedRun* r : runs) {
    for (const EpochRecord& e : r->epochs) {
      f << r->config.seed << ',' << e.epoch << ','
        << format_double(e.mean_return);
      for (double ret : e.eval_returns) f << ',' << format_double(ret);
      f << ',' << e.train_violations << ',' << e.eval_violations << ','
        << format_double(e.wallclock_s) << '\n';
    }
  }
  if (!f) throw std::runtime_error("write failed for " + file.string());
}

std::string svg_color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

void write_svg(const ResultsTable& table, const std::filesystem::path& file) {
  const double width = 840, height = 520;
  const double ml = 70, mr = 170, mt = 30, mb = 50;
  std::ofstream f(file);
  if (!f) throw std::runtime_error("cannot open " + file.string() + " for write");
  f.precision(6);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
    << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
    << height << "\">\n";

  struct Curve {
    std::string label;
    std::vector<double> mean, lo, hi;
  };
  std::vector<Curve> curves;
  double ymin = 0.0, ymax = 1.0;
  bool first = true;
  for (const AgentSummary& a : table.agents) {
    Curve c;
    c.label = a.label;
    c.mean = exp_smooth(a.mean_return, kDefaultSmoothing);
    const std::vector<double> band = exp_smooth(a.half_std, kDefaultSmoothing);
    for (std::size_t k = 0; k < c.mean.size(); ++k) {
      c.lo.push_back(c.mean[k] - band[k]);
      c.hi.push_back(c.mean[k] + band[k]);
      if (first) {
        ymin = c.lo[k];
        ymax = c.hi[k];
        first = false;
      }
      ymin = std::min(ymin, c.lo[k]);
      ymax = std::max(ymax, c.hi[k]);
    }
    curves.push_back(std::move(c));
  }
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
  const int epochs = std::max(1, table.epochs);
  auto px = [&](double k) {
    return ml + (width - ml - mr) * (epochs == 1 ? 0.5 : k / (epochs - 1));
  };
  auto py = [&](double v) {
    return height - mb - (height - mt - mb) * (v - ymin) / (ymax - ymin);
  };

  // axes
  f << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
    << width - mr << "\" y2=\"" << height - mb
    << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
    << "\" y2=\"" << height - mb << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  f << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
    << "\" font-size=\"14\" text-anchor=\"middle\">epoch</text>\n";
  f << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
    << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << (mt + height - mb) / 2 << ")\">mean return</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = ymin + (ymax - ymin) * tick / 4.0;
    f << "<text x=\"" << ml - 8 << "\" y=\"" << py(v) + 4
      << "\" font-size=\"11\" text-anchor=\"end\">" << v << "</text>\n";
    const double ke = (epochs - 1) * tick / 4.0;
    f << "<text x=\"" << px(ke) << "\" y=\"" << height - mb + 18
      << "\" font-size=\"11\" text-anchor=\"middle\">" << ke << "</text>\n";
  }

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const Curve& c = curves[i];
    const std::string color = svg_color(i);
    f << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
    for (std::size_t k = 0; k < c.hi.size(); ++k)
      f << px(static_cast<double>(k)) << ',' << py(c.hi[k]) << ' ';
    for (std::size_t k = c.lo.size(); k-- > 0;)
      f << px(static_cast<double>(k)) << ',' << py(c.lo[k]) << ' ';
    f << "\"/>\n";
    f << "<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t k = 0; k < c.mean.size(); ++k)
      f << px(static_cast<double>(k)) << ',' << py(c.mean[k]) << ' ';
    f << "\"/>\n";
    const double ly = mt + 18.0 * static_cast<double>(i) + 10;
    f << "<rect x=\"" << width - mr + 14 << "\" y=\"" << ly - 9
      << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
    f << "<text x=\"" << width - mr + 32 << "\" y=\"" << ly + 2
      << "\" font-size=\"12\">" << c.label << "</text>\n";
  }
  f << "</svg>\n";
}

}  // namespace

void write_outputs(const ResultsTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::vector<std::string> order;
  for (const AgentSummary& a : table.agents) order.push_back(a.label);

  const bool single_agent = order.size() <= 1;
  if (table.runs.empty()) {
    // header-only outputs
    write_epochs_csv({}, dir / "epochs.csv");
  }
  for (const std::string& label : order) {
    std::vector<const SeedRun*> members;
    for (const SeedRun& r : table.runs)
      if (r.label == label) members.push_back(&r);
    std::sort(members.begin(), members.end(),
              [](const SeedRun* a, const SeedRun* b) {
                return a->config.seed < b->config.seed;
              });
    const std::filesystem::path sub = single_agent ? dir : dir / label;
    std::filesystem::create_directories(sub);
    write_epochs_csv(members, sub / "epochs.csv");
    write_config_json(members.front()->config, sub / "config.json");
  }

  {
    std::ofstream f(dir / "summary.csv");
    if (!f) throw std::runtime_error("cannot write summary.csv");
    f << "agent,seeds,cr_star,auc_mean,auc_half_std,auc_per_seed\n";
    for (const AgentSummary& a : table.agents) {
      f << a.label << ',' << a.seeds.size() << ','
        << format_double(table.cr_star) << ',' << format_double(a.auc_mean)
        << ',' << format_double(a.auc_half_std) << ',';
      for (std::size_t i = 0; i < a.auc_per_seed.size(); ++i) {
        if (i) f << ';';
        f << format_double(a.auc_per_seed[i]);
      }
      f << '\n';
    }
  }
  write_svg(table, dir / "learning_curve.svg");
}

std::vector<LoadedSeries> read_epochs_csv(const std::filesystem::path& file) {
  std::ifstream f(file);
  if (!f) throw std::runtime_error("cannot open " + file.string());
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error(file.string() + ": missing header");
  std::vector<LoadedSeries> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    const std::uint64_t seed = std::stoull(cell);
    std::getline(ss, cell, ',');  // epoch, rows arrive in order
    std::getline(ss, cell, ',');
    const double mean_return = std::stod(cell);
    if (out.empty() || out.back().seed != seed) {
      LoadedSeries s;
      s.seed = seed;
      out.push_back(std::move(s));
    }
    out.back().mean_returns.push_back(mean_return);
  }
  return out;
}

}  // namespace rllg
