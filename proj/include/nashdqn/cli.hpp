#pragma once

#include <cstdint>
#include <string>

namespace nashdqn::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;      // bad config / arguments / files
inline constexpr int kExitNumerical = 2;  // training diverged

// Trains from a config file; writes checkpoints, the resolved config and a
// line-delimited training log into the output directory (the
// NASHDQN_OUTPUT_DIR environment variable overrides the configured one).
int run_train(const std::string& config_path);

struct HeatmapOptions {
  std::string checkpoint;
  std::string out = "heatmap.csv";
  double price = 10.0;
  double qbar = 0.0;
  double q_min = -100.0;
  double q_max = 100.0;
  double q_step = 5.0;
  int t_min = 0;
  int t_max = -1;  // -1: horizon - 1
};
// Emits the policy matrix over (own inventory, time) plus a companion
// "<out stem>_threshold.csv" with the buy/sell switching curve.
int run_heatmap(const HeatmapOptions& options);

struct PathsOptions {
  std::string checkpoint;
  std::string out_dir = ".";
  int rows = 3;
  int cols = 3;
  std::uint64_t seed = 1;
};
// Simulates a rows x cols grid of greedy episodes: initial inventories vary
// by row, initial price and the noise stream vary by column. One CSV per
// episode with the price and all inventory paths.
int run_paths(const PathsOptions& options);

struct EvalOptions {
  std::string checkpoint;
  int episodes = 100;
  std::uint64_t seed = 1;
};
// Greedy-policy evaluation; prints a JSON summary (per-agent mean return and
// standard error, mean terminal inventory, mean Bellman residual).
int run_eval(const EvalOptions& options);

}  // namespace nashdqn::cli
