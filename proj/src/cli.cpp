#include "nashdqn/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <json.hpp>

#include "nashdqn/analysis.hpp"
#include "nashdqn/checkpoint.hpp"
#include "nashdqn/config.hpp"
#include "nashdqn/trainer.hpp"

namespace nashdqn::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Loads a checkpoint and rebuilds the game it was trained on.
struct LoadedRun {
  std::unique_ptr<NashQModel> model;
  RunConfig config;
};

LoadedRun load_run(const std::string& checkpoint_path) {
  LoadedRun run;
  json cfg_json;
  run.model = load_checkpoint(checkpoint_path, &cfg_json);
  if (cfg_json.is_null()) {
    throw std::invalid_argument("checkpoint carries no run configuration");
  }
  run.config = parse_config(cfg_json);
  if (run.config.market.n_agents != run.model->n_agents()) {
    throw std::invalid_argument("checkpoint/model agent-count mismatch");
  }
  return run;
}

std::vector<int> time_grid(int t_min, int t_max, int horizon) {
  if (t_max < 0) t_max = horizon - 1;
  if (t_min < 0 || t_max < t_min || t_max >= horizon) {
    throw std::invalid_argument("bad time grid");
  }
  std::vector<int> out;
  for (int t = t_min; t <= t_max; ++t) out.push_back(t);
  return out;
}

std::vector<double> inventory_grid(double q_min, double q_max, double q_step) {
  if (q_step <= 0.0 || q_max < q_min) {
    throw std::invalid_argument("bad inventory grid");
  }
  std::vector<double> out;
  for (double q = q_min; q <= q_max + 1e-9; q += q_step) out.push_back(q);
  return out;
}

}  // namespace

int run_train(const std::string& config_path) {
  RunConfig config;
  try {
    config = load_config_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  std::string out_dir = config.output_dir;
  if (const char* env = std::getenv("NASHDQN_OUTPUT_DIR")) {
    out_dir = env;
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output dir '" << out_dir << "'\n";
    return kExitUsage;
  }

  MarketGame game(config.market, config.init);
  NashQModel model(config.market.n_agents, config.model,
                   game.feature_scales());
  model.init_params(config.train.seed);

  save_config_file(out_dir + "/config.json", config);
  std::ofstream log(out_dir + "/train_log.jsonl");
  if (!log) {
    std::cerr << "error: cannot write training log in '" << out_dir << "'\n";
    return kExitUsage;
  }

  const json cfg_json = to_json(config);
  const auto write_checkpoint = [&](const std::string& name,
                                    const NashQModel& m) {
    save_checkpoint(out_dir + "/" + name, m, cfg_json);
  };

  try {
    train(
        game, model, config.train,
        [&](int episode, const NashQModel& m) {
          write_checkpoint("checkpoint_" + std::to_string(episode) + ".ckpt",
                           m);
          std::cout << "episode " << episode << "/" << config.train.episodes
                    << std::endl;
        },
        [&](const EpisodeRecord& rec) {
          json line;
          line["episode"] = rec.episode;
          line["sigma"] = rec.sigma;
          line["loss"] = rec.mean_loss;
          line["returns"] = std::vector<double>(
              rec.returns.data(), rec.returns.data() + rec.returns.size());
          log << line.dump() << "\n";
        });
  } catch (const TrainingDiverged& e) {
    const std::string diag_path = out_dir + "/diagnostics.json";
    json diag;
    diag["error"] = e.what();
    diag["episode"] = e.episode;
    diag["step"] = e.step;
    diag["loss"] = e.loss;
    diag["param_norm"] = model.params().flat().norm();
    std::ofstream diag_out(diag_path);
    diag_out << diag.dump(2) << "\n";
    std::cerr << "error: " << e.what() << " (diagnostics: " << diag_path
              << ")\n";
    return kExitNumerical;
  }

  write_checkpoint("final.ckpt", model);
  return kExitOk;
}

int run_heatmap(const HeatmapOptions& options) {
  try {
    LoadedRun run = load_run(options.checkpoint);
    const std::vector<int> ts = time_grid(options.t_min, options.t_max,
                                          run.config.market.horizon_T);
    const std::vector<double> qs =
        inventory_grid(options.q_min, options.q_max, options.q_step);
    const Eigen::MatrixXd mu =
        heatmap_matrix(*run.model, options.price, options.qbar, ts, qs);

    std::ofstream out(options.out);
    if (!out) throw std::invalid_argument("cannot write '" + options.out + "'");
    out << "own_inventory";
    for (int t : ts) out << ",mu_t" << t;
    out << " # price=" << format_double(options.price)
        << " qbar_others=" << format_double(options.qbar) << "\n";
    for (Eigen::Index r = 0; r < mu.rows(); ++r) {
      out << format_double(qs[static_cast<std::size_t>(r)]);
      for (Eigen::Index c = 0; c < mu.cols(); ++c) {
        out << "," << format_double(mu(r, c));
      }
      out << "\n";
    }

    fs::path thr_path(options.out);
    thr_path.replace_filename(thr_path.stem().string() + "_threshold.csv");
    std::ofstream thr(thr_path);
    thr << "t,threshold_q # price=" << format_double(options.price)
        << " qbar_others=" << format_double(options.qbar) << "\n";
    for (Eigen::Index c = 0; c < mu.cols(); ++c) {
      thr << ts[static_cast<std::size_t>(c)] << ","
          << format_double(buy_sell_threshold(mu.col(c), qs)) << "\n";
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

int run_paths(const PathsOptions& options) {
  try {
    LoadedRun run = load_run(options.checkpoint);
    MarketGame game(run.config.market, run.config.init);
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);

    // Row draws: initial inventories. Column draws: initial price and the
    // seed of the per-column noise stream (shared across rows).
    Rng row_rng(options.seed);
    std::vector<Eigen::VectorXd> inventories;
    for (int r = 0; r < options.rows; ++r) {
      inventories.push_back(
          sample_initial(run.config.market, run.config.init, row_rng)
              .inventories);
    }
    Rng col_rng(options.seed + 0x9e3779b97f4a7c15ull);
    std::vector<double> prices;
    std::vector<std::uint64_t> noise_seeds;
    for (int c = 0; c < options.cols; ++c) {
      prices.push_back(
          sample_initial(run.config.market, run.config.init, col_rng).price);
      noise_seeds.push_back(col_rng.next_u64());
    }

    for (int r = 0; r < options.rows; ++r) {
      for (int c = 0; c < options.cols; ++c) {
        MarketState state;
        state.step = 0;
        state.price = prices[static_cast<std::size_t>(c)];
        state.inventories = inventories[static_cast<std::size_t>(r)];
        Rng noise(noise_seeds[static_cast<std::size_t>(c)]);
        const auto episode = greedy_rollout(game, *run.model, state, noise);

        const std::string path = options.out_dir + "/path_r" +
                                 std::to_string(r) + "_c" + std::to_string(c) +
                                 ".csv";
        std::ofstream out(path);
        if (!out) throw std::invalid_argument("cannot write '" + path + "'");
        out << "t,price";
        for (int i = 0; i < game.n_agents(); ++i) out << ",q" << (i + 1);
        out << "\n";
        const auto emit = [&](int t, const MarketState& s) {
          out << t << "," << format_double(s.price);
          for (int i = 0; i < game.n_agents(); ++i) {
            out << "," << format_double(s.inventories[i]);
          }
          out << "\n";
        };
        emit(0, episode.front().state);
        for (std::size_t k = 0; k < episode.size(); ++k) {
          emit(static_cast<int>(k) + 1, episode[k].next_state);
        }
      }
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

int run_eval(const EvalOptions& options) {
  try {
    LoadedRun run = load_run(options.checkpoint);
    MarketGame game(run.config.market, run.config.init);
    Rng rng(options.seed);
    const EvalSummary summary = evaluate_policy(
        game, *run.model, options.episodes, run.config.train.gamma, rng);
    json out;
    out["episodes"] = summary.episodes;
    out["mean_return"] = std::vector<double>(
        summary.mean_return.data(),
        summary.mean_return.data() + summary.mean_return.size());
    out["se_return"] = std::vector<double>(
        summary.se_return.data(),
        summary.se_return.data() + summary.se_return.size());
    out["mean_terminal_abs_inventory"] = summary.mean_terminal_abs_inventory;
    out["mean_bellman_loss"] = summary.mean_bellman_loss;
    std::cout << out.dump(2) << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace nashdqn::cli
