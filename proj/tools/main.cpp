#include <CLI11.hpp>

#include "nashdqn/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Nash-DQN: deep Q-learning of Nash equilibria in general-sum "
      "stochastic games, with an N-agent optimal-execution market game"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* train = app.add_subcommand("train", "Train from a config file");
  train->add_option("--config", config_path, "Run configuration (JSON)")
      ->required();

  nashdqn::cli::HeatmapOptions heatmap;
  CLI::App* hm = app.add_subcommand(
      "heatmap", "Emit the policy over (own inventory, time)");
  hm->add_option("--checkpoint", heatmap.checkpoint, "Trained checkpoint")
      ->required();
  hm->add_option("--out", heatmap.out, "Output CSV path");
  hm->add_option("--price", heatmap.price, "Fixed asset price");
  hm->add_option("--qbar", heatmap.qbar, "Common other-agent inventory");
  hm->add_option("--q-min", heatmap.q_min, "Inventory grid start");
  hm->add_option("--q-max", heatmap.q_max, "Inventory grid end");
  hm->add_option("--q-step", heatmap.q_step, "Inventory grid step");
  hm->add_option("--t-min", heatmap.t_min, "First time step");
  hm->add_option("--t-max", heatmap.t_max, "Last time step (-1: horizon-1)");

  nashdqn::cli::PathsOptions paths;
  CLI::App* pa = app.add_subcommand(
      "paths", "Simulate a grid of greedy episodes and dump the paths");
  pa->add_option("--checkpoint", paths.checkpoint, "Trained checkpoint")
      ->required();
  pa->add_option("--out-dir", paths.out_dir, "Output directory");
  pa->add_option("--rows", paths.rows, "Initial-inventory draws");
  pa->add_option("--cols", paths.cols, "Initial-price/noise draws");
  pa->add_option("--seed", paths.seed, "Base seed");

  nashdqn::cli::EvalOptions eval;
  CLI::App* ev =
      app.add_subcommand("eval", "Evaluate the greedy policy");
  ev->add_option("--checkpoint", eval.checkpoint, "Trained checkpoint")
      ->required();
  ev->add_option("--episodes", eval.episodes, "Evaluation episodes");
  ev->add_option("--seed", eval.seed, "Evaluation seed");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) return nashdqn::cli::run_train(config_path);
  if (hm->parsed()) return nashdqn::cli::run_heatmap(heatmap);
  if (pa->parsed()) return nashdqn::cli::run_paths(paths);
  if (ev->parsed()) return nashdqn::cli::run_eval(eval);
  return nashdqn::cli::kExitUsage;
}
