#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rllg/env.hpp"
#include "rllg/mlp.hpp"

namespace rllg {

/// Everything a single training run needs; serializable to flat key=value
/// text and back, every CLI flag addressable.
struct RunConfig {
  std::string env_id = "point-mass";
  std::string agent = "sac";
  int epochs = 100;
  int steps_per_epoch = 1000;
  int updates_per_epoch = 1000;
  int eval_trials = 5;
  std::uint64_t seed = 0;
  int batch_size = 256;
  std::uint64_t buffer_capacity = 1000000;

  // networks; empty hidden -> per-env default (64x64 guided, 32x32 safety)
  std::vector<int> hidden;
  std::string policy_activation = "relu";
  std::string q_activation;  // empty -> env default (tanh on safe cartpole)
  double lr = 3e-4;
  double gamma = -1.0;  // <0 -> env default
  double tau = 0.005;
  double init_alpha = 1.0;

  // strategy knobs
  double phi = 0.2;
  double beta0 = -1.0;      // <0 -> use-case default
  std::string schedule;     // const|decay|rise; empty -> use-case default
  double delta = 0.8;
  int period = 50;
  double lambda_threshold = 0.5;
  std::string bc_metric = "log-density";  // or "distance"

  std::string guide_checkpoint;  // learned guide (point-mass)
  double snapshot_fraction = 0.0;  // >0: save the policy at frac*epochs
  std::string out_dir;
  bool timing = true;  // false writes wallclock_s as 0 for byte-stable CSVs

  EnvOverrides env_overrides;
};

/// Fills env-dependent defaults (network sizes, activations, schedulers,
/// gamma) and validates. Idempotent.
RunConfig resolve_run_config(RunConfig cfg);

struct EpochRecord {
  int epoch = 0;
  std::vector<double> eval_returns;  // undiscounted episode sums
  double mean_return = 0.0;
  std::int64_t train_violations = 0;
  std::int64_t eval_violations = 0;
  double wallclock_s = 0.0;
};

struct SeedRun {
  std::string label;  // display name; defaults to the agent id
  RunConfig config;   // resolved
  std::vector<EpochRecord> epochs;
};

/// Algorithm-1 style loop: collect steps_per_epoch transitions with the
/// strategy's exploration policy, run updates_per_epoch gradient iterations,
/// evaluate eval_trials episodes. Fully deterministic given the config.
SeedRun run_training(const RunConfig& cfg, const std::string& label = "");

/// Runs many configs as isolated workers on `jobs` threads; results come back
/// in input order regardless of scheduling.
std::vector<SeedRun> run_grid(const std::vector<SeedRun>& prototypes, int jobs);

/// (sum_k CR(k)) / (K * cr_star); throws when K < 1 or cr_star == 0.
double normalized_auc(std::span<const double> series, double cr_star);

/// y_0 = x_0; y_t = w*y_{t-1} + (1-w)*x_t.
std::vector<double> exp_smooth(std::span<const double> series, double w);

struct AgentSummary {
  std::string label;
  std::vector<std::uint64_t> seeds;
  std::vector<double> mean_return;  // per epoch, averaged over seeds
  std::vector<double> half_std;     // population std / 2
  std::vector<double> auc_per_seed;
  double auc_mean = 0.0;
  double auc_half_std = 0.0;
};

struct ResultsTable {
  int epochs = 0;
  double cr_star = 0.0;  // max CR(k) over every run in the comparison set
  std::vector<SeedRun> runs;
  std::vector<AgentSummary> agents;
};

/// Groups runs by label, aggregates mean/half-std per epoch and the
/// normalized AUC with cr_star shared across the whole comparison set.
ResultsTable aggregate(std::vector<SeedRun> runs);

/// Emits epochs.csv (+config.json) per agent, summary.csv and
/// learning_curve.svg. Byte-deterministic given (config, seed) when runs were
/// recorded with timing disabled.
void write_outputs(const ResultsTable& table, const std::filesystem::path& dir);

struct LoadedSeries {
  std::uint64_t seed = 0;
  std::vector<double> mean_returns;
};
std::vector<LoadedSeries> read_epochs_csv(const std::filesystem::path& file);

inline constexpr double kDefaultSmoothing = 0.9;  // plotting only

}  // namespace rllg
