#include "nashdqn/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

namespace nashdqn {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("config: " + what);
}

void check_keys(const json& j, const std::string& section,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) fail("section '" + section + "' must be an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      fail("unknown key '" + section + "." + item.key() + "'");
    }
  }
}

template <typename T>
void read(const json& j, const std::string& section, const std::string& key,
          T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    fail("bad value for '" + section + "." + key + "'");
  }
}

double read_b2(const json& j) {
  if (!j.contains("b2")) return std::numeric_limits<double>::infinity();
  const json& v = j.at("b2");
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") {
      return std::numeric_limits<double>::infinity();
    }
    fail("market.b2 must be a number or \"inf\"");
  }
  if (!v.is_number()) fail("market.b2 must be a number or \"inf\"");
  return v.get<double>();
}

ImpactKind read_impact(const json& j) {
  if (!j.contains("impact")) return ImpactKind::Linear;
  const std::string s = j.at("impact").get<std::string>();
  if (s == "linear") return ImpactKind::Linear;
  if (s == "sqrt") return ImpactKind::SquareRoot;
  fail("market.impact must be \"linear\" or \"sqrt\"");
}

}  // namespace

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  check_keys(j, "<root>", {"market", "init", "model", "train", "output_dir"});

  if (j.contains("market")) {
    const json& m = j.at("market");
    check_keys(m, "market",
               {"kappa", "theta", "sigma", "b1", "b2", "b3", "dt", "horizon",
                "n_agents", "q_bound", "impact"});
    read(m, "market", "kappa", cfg.market.kappa);
    read(m, "market", "theta", cfg.market.theta_mr);
    read(m, "market", "sigma", cfg.market.sigma);
    read(m, "market", "b1", cfg.market.b1);
    cfg.market.b2 = read_b2(m);
    read(m, "market", "b3", cfg.market.b3);
    read(m, "market", "dt", cfg.market.dt);
    read(m, "market", "horizon", cfg.market.horizon_T);
    read(m, "market", "n_agents", cfg.market.n_agents);
    read(m, "market", "q_bound", cfg.market.q_bound);
    cfg.market.impact_kind = read_impact(m);
  }

  if (j.contains("init")) {
    const json& i = j.at("init");
    check_keys(i, "init", {"sigma_q", "price_mean", "sigma_p"});
    read(i, "init", "sigma_q", cfg.init.sigma_q);
    read(i, "init", "price_mean", cfg.init.price_mean);
    read(i, "init", "sigma_p", cfg.init.sigma_p);
    if (cfg.init.sigma_q < 0 || cfg.init.sigma_p < 0 ||
        cfg.init.price_mean < 0) {
      fail("init: distribution parameters must be nonnegative");
    }
  }

  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, "model",
               {"value_hidden", "phi_hidden", "phi_out", "main_hidden",
                "epsilon"});
    read(m, "model", "value_hidden", cfg.model.value_hidden);
    read(m, "model", "phi_hidden", cfg.model.phi_hidden);
    read(m, "model", "phi_out", cfg.model.phi_out);
    read(m, "model", "main_hidden", cfg.model.main_hidden);
    read(m, "model", "epsilon", cfg.model.epsilon);
    if (!(cfg.model.epsilon > 0.0)) fail("model.epsilon must be > 0");
    if (cfg.model.phi_out < 1) fail("model.phi_out must be >= 1");
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, "train",
               {"episodes", "minibatch", "buffer_capacity", "lr_value",
                "lr_advantage", "gamma", "sigma_start", "sigma_end", "seed",
                "eval_every", "semi_gradient", "target_sync", "optimizer"});
    read(t, "train", "episodes", cfg.train.episodes);
    read(t, "train", "minibatch", cfg.train.minibatch);
    read(t, "train", "buffer_capacity", cfg.train.buffer_capacity);
    read(t, "train", "lr_value", cfg.train.lr_value);
    read(t, "train", "lr_advantage", cfg.train.lr_advantage);
    read(t, "train", "gamma", cfg.train.gamma);
    read(t, "train", "sigma_start", cfg.train.sigma_start);
    read(t, "train", "sigma_end", cfg.train.sigma_end);
    read(t, "train", "seed", cfg.train.seed);
    read(t, "train", "eval_every", cfg.train.eval_every);
    read(t, "train", "semi_gradient", cfg.train.semi_gradient);
    read(t, "train", "target_sync", cfg.train.target_sync);
    if (t.contains("optimizer")) {
      const std::string opt = t.at("optimizer").get<std::string>();
      if (opt == "sgd") {
        cfg.train.optimizer = OptimizerKind::Sgd;
      } else if (opt == "adam") {
        cfg.train.optimizer = OptimizerKind::Adam;
      } else {
        fail("train.optimizer must be \"sgd\" or \"adam\"");
      }
    }
  }

  read(j, "<root>", "output_dir", cfg.output_dir);

  try {
    cfg.market.validate();
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json m;
  m["kappa"] = cfg.market.kappa;
  m["theta"] = cfg.market.theta_mr;
  m["sigma"] = cfg.market.sigma;
  m["b1"] = cfg.market.b1;
  if (cfg.market.infinite_terminal_penalty()) {
    m["b2"] = "inf";
  } else {
    m["b2"] = cfg.market.b2;
  }
  m["b3"] = cfg.market.b3;
  m["dt"] = cfg.market.dt;
  m["horizon"] = cfg.market.horizon_T;
  m["n_agents"] = cfg.market.n_agents;
  m["q_bound"] = cfg.market.q_bound;
  m["impact"] =
      cfg.market.impact_kind == ImpactKind::Linear ? "linear" : "sqrt";

  json i;
  i["sigma_q"] = cfg.init.sigma_q;
  i["price_mean"] = cfg.init.price_mean;
  i["sigma_p"] = cfg.init.sigma_p;

  json mo;
  mo["value_hidden"] = cfg.model.value_hidden;
  mo["phi_hidden"] = cfg.model.phi_hidden;
  mo["phi_out"] = cfg.model.phi_out;
  mo["main_hidden"] = cfg.model.main_hidden;
  mo["epsilon"] = cfg.model.epsilon;

  json t;
  t["episodes"] = cfg.train.episodes;
  t["minibatch"] = cfg.train.minibatch;
  t["buffer_capacity"] = cfg.train.buffer_capacity;
  t["lr_value"] = cfg.train.lr_value;
  t["lr_advantage"] = cfg.train.lr_advantage;
  t["gamma"] = cfg.train.gamma;
  t["sigma_start"] = cfg.train.sigma_start;
  t["sigma_end"] = cfg.train.sigma_end;
  t["seed"] = cfg.train.seed;
  t["eval_every"] = cfg.train.eval_every;
  t["semi_gradient"] = cfg.train.semi_gradient;
  t["target_sync"] = cfg.train.target_sync;
  t["optimizer"] =
      cfg.train.optimizer == OptimizerKind::Sgd ? "sgd" : "adam";

  json root;
  root["market"] = m;
  root["init"] = i;
  root["model"] = mo;
  root["train"] = t;
  root["output_dir"] = cfg.output_dir;
  return root;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail("parse error in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

void save_config_file(const std::string& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) fail("cannot write '" + path + "'");
  out << to_json(config).dump(2) << "\n";
}

}  // namespace nashdqn
