// rllg: train and benchmark guide-integrated soft actor-critic agents on the
// scripted desk-scale environments.

#include <CLI11.hpp>
#include <iostream>

#include "rllg/config.hpp"
#include "rllg/harness.hpp"

namespace {

struct CommonFlags {
  std::string config_file;
  std::vector<std::string> sets;
};

void add_config_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file,
                  "flat key=value config file (or an emitted config.json)");
  cmd->add_option("--set", flags.sets,
                  "extra key=value pair, repeatable (env.* keys reach the "
                  "environment)")
      ->expected(-1);
}

rllg::RunConfig base_config(const CommonFlags& flags) {
  rllg::RunConfig cfg;
  if (!flags.config_file.empty())
    cfg = rllg::apply_kv(cfg, rllg::parse_kv_file(flags.config_file),
                         flags.config_file);
  return cfg;
}

rllg::RunConfig apply_sets(rllg::RunConfig cfg, const CommonFlags& flags) {
  rllg::KvMap kv;
  for (const std::string& s : flags.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return rllg::apply_kv(std::move(cfg), kv, "--set");
}

int run_command(const rllg::RunConfig& cfg) {
  const rllg::RunConfig resolved = rllg::resolve_run_config(cfg);
  std::cout << "run " << resolved.agent << " on " << resolved.env_id
            << " seed " << resolved.seed << " (" << resolved.epochs
            << " epochs)\n";
  rllg::SeedRun run = rllg::run_training(resolved);
  for (const rllg::EpochRecord& e : run.epochs)
    std::cout << "epoch " << e.epoch << "  return " << e.mean_return
              << "  violations " << e.train_violations << '\n';
  rllg::ResultsTable table = rllg::aggregate({std::move(run)});
  if (!resolved.out_dir.empty()) {
    rllg::write_outputs(table, resolved.out_dir);
    std::cout << "wrote " << resolved.out_dir << "/epochs.csv, summary.csv, "
              << "learning_curve.svg\n";
  }
  std::cout << "normalized AUC " << table.agents.front().auc_mean << '\n';
  return 0;
}

int bench_command(const std::string& suite_file, const rllg::RunConfig& base,
                  const std::string& out_override, int jobs) {
  std::vector<rllg::SuiteEntry> entries = rllg::parse_suite(suite_file, base);
  std::vector<rllg::SeedRun> protos;
  for (rllg::SuiteEntry& e : entries) {
    rllg::SeedRun p;
    p.label = e.label;
    p.config = rllg::resolve_run_config(e.config);
    p.config.out_dir.clear();  // per-run checkpoints off inside a grid
    protos.push_back(std::move(p));
  }
  std::string out = out_override.empty() ? entries.front().config.out_dir
                                         : out_override;
  if (out.empty()) out = "bench-results";
  std::cout << "bench: " << protos.size() << " runs on " << jobs
            << " workers -> " << out << '\n';
  std::vector<rllg::SeedRun> runs = rllg::run_grid(protos, jobs);
  rllg::ResultsTable table = rllg::aggregate(std::move(runs));
  rllg::write_outputs(table, out);
  std::cout << "agent            auc_mean   auc_half_std\n";
  for (const rllg::AgentSummary& a : table.agents) {
    std::cout << a.label;
    for (std::size_t i = a.label.size(); i < 17; ++i) std::cout << ' ';
    std::cout << a.auc_mean << "   " << a.auc_half_std << '\n';
  }
  std::cout << "cr_star " << table.cr_star << '\n';
  return 0;
}

int auc_command(const std::string& in_file, double cr_star) {
  const std::vector<rllg::LoadedSeries> series = rllg::read_epochs_csv(in_file);
  if (series.empty()) {
    std::cout << "no rows in " << in_file << '\n';
    return 1;
  }
  double best = cr_star;
  if (best == 0.0)
    for (const rllg::LoadedSeries& s : series)
      for (double v : s.mean_returns) best = std::max(best, v);
  double sum = 0.0;
  for (const rllg::LoadedSeries& s : series) {
    const double auc = rllg::normalized_auc(s.mean_returns, best);
    sum += auc;
    std::cout << "seed " << s.seed << "  auc " << auc << '\n';
  }
  std::cout << "cr_star " << best << "  mean auc "
            << sum / static_cast<double>(series.size()) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reinforcement learning with local guides"};
  app.require_subcommand(1);

  // run
  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "train one agent on one environment");
  rllg::KvMap run_kv;
  std::map<std::string, std::string> flag_to_key = {
      {"--env", "env"},           {"--agent", "agent"},
      {"--epochs", "epochs"},     {"--seed", "seed"},
      {"--steps-per-epoch", "steps_per_epoch"},
      {"--updates-per-epoch", "updates_per_epoch"},
      {"--eval-trials", "eval_trials"},
      {"--batch-size", "batch_size"},
      {"--hidden", "hidden"},     {"--lr", "lr"},
      {"--gamma", "gamma"},       {"--tau", "tau"},
      {"--phi", "phi"},           {"--beta0", "beta0"},
      {"--schedule", "schedule"}, {"--delta", "delta"},
      {"--period", "period"},     {"--lambda-threshold", "lambda_threshold"},
      {"--bc-metric", "bc_metric"},
      {"--guide-checkpoint", "guide_checkpoint"},
      {"--snapshot-fraction", "snapshot_fraction"},
      {"--out", "out"},           {"--timing", "timing"}};
  auto kv_values = std::make_shared<std::map<std::string, std::string>>();
  for (const auto& [flag, key] : flag_to_key) {
    run->add_option_function<std::string>(
        flag,
        [kv_values, key = key](const std::string& v) { (*kv_values)[key] = v; },
        "sets config key '" + key + "'");
  }
  add_config_flags(run, run_flags);

  // bench
  CommonFlags bench_flags;
  std::string suite_file, bench_out;
  int jobs = 1;
  auto* bench = app.add_subcommand("bench", "run a declared grid of agents");
  bench->add_option("--suite", suite_file, "suite declaration file")
      ->required();
  bench->add_option("--out", bench_out, "output directory (overrides suite)");
  bench->add_option("--jobs", jobs, "parallel workers");
  add_config_flags(bench, bench_flags);

  // auc
  std::string auc_in;
  double auc_cr_star = 0.0;
  auto* auc = app.add_subcommand("auc", "recompute metrics from epochs.csv");
  auc->add_option("--in", auc_in, "epochs.csv produced by run/bench")
      ->required();
  auc->add_option("--cr-star", auc_cr_star,
                  "normalization constant (default: the file's own max)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      rllg::RunConfig cfg = base_config(run_flags);
      cfg = rllg::apply_kv(std::move(cfg), *kv_values, "flags");
      cfg = apply_sets(std::move(cfg), run_flags);
      return run_command(cfg);
    }
    if (bench->parsed()) {
      rllg::RunConfig cfg = base_config(bench_flags);
      cfg = apply_sets(std::move(cfg), bench_flags);
      return bench_command(suite_file, cfg, bench_out, jobs);
    }
    if (auc->parsed()) return auc_command(auc_in, auc_cr_star);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
