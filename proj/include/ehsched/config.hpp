#pragma once

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ehsched/common.hpp"
#include "ehsched/env.hpp"
#include "ehsched/nn.hpp"

namespace ehsched {

enum class ActionMode {
  kAuto,        // enumerated when the subset count fits the cap, else factorized
  kEnumerated,  // one Q output per K-subset, combinadic indexing
  kFactorized,  // one score per UE, act by top-K
};

// Everything a run needs: scenario, algorithm selector, hyperparameters, seed.
struct ExperimentConfig {
  ScenarioConfig scenario;
  std::string algorithm = "access";  // access | predict | joint | baseline:{rr,random,mp,oracle}
  double gamma = 0.99;
  double gamma_pred = 0.9;
  double alpha = 1e-4;
  double beta = 100.0;
  int batch_size = 16;
  long replay_capacity = 100000;
  int lstm_units = 128;
  int history_window = 10;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  long epsilon_decay_steps = 10000;
  int sync_period = 100;
  long episode_length = 200;  // T, joint training only
  long episodes = 100;        // E_p, joint training only
  long total_steps = 30000;
  ActionMode action_mode = ActionMode::kAuto;
  long action_enum_cap = 4096;
  double grad_clip_norm = 10.0;
  Activation dense_activation = Activation::kIdentity;
  double gain_db_min = -140.0;  // network-input normalization range for gains
  double gain_db_max = -10.0;
  std::uint64_t seed = 1;

  void validate() const {
    scenario.validate();
    static const std::set<std::string> algos = {
        "access",       "predict",         "joint",       "baseline:rr",
        "baseline:random", "baseline:mp",  "baseline:oracle"};
    if (!algos.count(algorithm)) throw ConfigError("unknown algorithm: " + algorithm);
    if (gamma <= 0.0 || gamma >= 1.0) throw ConfigError("gamma must lie in (0,1)");
    if (gamma_pred < 0.0 || gamma_pred >= 1.0)
      throw ConfigError("gamma_pred must lie in [0,1)");
    if (alpha <= 0.0) throw ConfigError("alpha must be > 0");
    if (beta < 0.0) throw ConfigError("beta must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (replay_capacity < 1) throw ConfigError("replay_capacity must be >= 1");
    if (lstm_units < 1) throw ConfigError("lstm_units must be >= 1");
    if (history_window < 1) throw ConfigError("history_window must be >= 1");
    if (epsilon_end < 0.0 || epsilon_start < epsilon_end || epsilon_start > 1.0)
      throw ConfigError("epsilon schedule must satisfy 0 <= end <= start <= 1");
    if (epsilon_decay_steps < 1) throw ConfigError("epsilon_decay_steps must be >= 1");
    if (sync_period < 1) throw ConfigError("sync_period must be >= 1");
    if (episode_length < 1) throw ConfigError("episode_length must be >= 1");
    if (episodes < 1) throw ConfigError("episodes must be >= 1");
    if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
    if (action_enum_cap < 1) throw ConfigError("action_enum_cap must be >= 1");
    if (grad_clip_norm < 0.0) throw ConfigError("grad_clip_norm must be >= 0");
    if (gain_db_max <= gain_db_min) throw ConfigError("gain_db range is empty");
  }

  // Short token used for metric file names.
  std::string algo_token() const {
    if (algorithm.rfind("baseline:", 0) == 0) return algorithm.substr(9);
    return algorithm;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": '" + v + "'");
  }
}

inline long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("bad boolean value for " + key + ": '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// Flat `key = value` text. Unspecified keys keep their defaults; unknown keys
// are rejected. `#` starts a comment.
inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));

    ScenarioConfig& sc = cfg.scenario;
    if (key == "n_ues") sc.n_ues = static_cast<int>(detail::parse_long(key, val));
    else if (key == "k_channels") sc.k_channels = static_cast<int>(detail::parse_long(key, val));
    else if (key == "battery_capacity") sc.battery_capacity = static_cast<int>(detail::parse_long(key, val));
    else if (key == "tx_power") sc.tx_power = static_cast<int>(detail::parse_long(key, val));
    else if (key == "unit_power_dbm") sc.unit_power_dbm = detail::parse_double(key, val);
    else if (key == "bandwidth_hz") sc.bandwidth_hz = detail::parse_double(key, val);
    else if (key == "noise_dbm_per_hz") sc.noise_dbm_per_hz = detail::parse_double(key, val);
    else if (key == "cell_size_m") sc.cell_size_m = detail::parse_double(key, val);
    else if (key == "ue_speed_mps") sc.ue_speed_mps = detail::parse_double(key, val);
    else if (key == "energy_rate_min") sc.energy_rate_min = detail::parse_double(key, val);
    else if (key == "energy_rate_max") sc.energy_rate_max = detail::parse_double(key, val);
    else if (key == "energy_rates") sc.energy_rates = detail::parse_list(key, val);
    else if (key == "fading_enabled") sc.fading_enabled = detail::parse_bool(key, val);
    else if (key == "rate_unit_divisor") sc.rate_unit_divisor = detail::parse_double(key, val);
    else if (key == "energy_model") {
      if (val == "poisson") sc.energy_model = EnergyModel::kPoisson;
      else if (val == "fixed") sc.energy_model = EnergyModel::kFixed;
      else if (val == "cyclic") sc.energy_model = EnergyModel::kCyclic;
      else throw ConfigError("unknown energy_model: " + val);
    }
    else if (key == "cycle_period") sc.cycle_period = static_cast<int>(detail::parse_long(key, val));
    else if (key == "cycle_amount") sc.cycle_amount = static_cast<int>(detail::parse_long(key, val));
    else if (key == "initial_battery") sc.initial_battery = static_cast<int>(detail::parse_long(key, val));
    else if (key == "algorithm") cfg.algorithm = val;
    else if (key == "gamma") cfg.gamma = detail::parse_double(key, val);
    else if (key == "gamma_pred") cfg.gamma_pred = detail::parse_double(key, val);
    else if (key == "alpha") cfg.alpha = detail::parse_double(key, val);
    else if (key == "beta") cfg.beta = detail::parse_double(key, val);
    else if (key == "batch_size") cfg.batch_size = static_cast<int>(detail::parse_long(key, val));
    else if (key == "replay_capacity") cfg.replay_capacity = detail::parse_long(key, val);
    else if (key == "lstm_units") cfg.lstm_units = static_cast<int>(detail::parse_long(key, val));
    else if (key == "history_window") cfg.history_window = static_cast<int>(detail::parse_long(key, val));
    else if (key == "epsilon_start") cfg.epsilon_start = detail::parse_double(key, val);
    else if (key == "epsilon_end") cfg.epsilon_end = detail::parse_double(key, val);
    else if (key == "epsilon_decay_steps") cfg.epsilon_decay_steps = detail::parse_long(key, val);
    else if (key == "sync_period") cfg.sync_period = static_cast<int>(detail::parse_long(key, val));
    else if (key == "episode_length") cfg.episode_length = detail::parse_long(key, val);
    else if (key == "episodes") cfg.episodes = detail::parse_long(key, val);
    else if (key == "total_steps") cfg.total_steps = detail::parse_long(key, val);
    else if (key == "action_mode") {
      if (val == "auto") cfg.action_mode = ActionMode::kAuto;
      else if (val == "enumerated") cfg.action_mode = ActionMode::kEnumerated;
      else if (val == "factorized") cfg.action_mode = ActionMode::kFactorized;
      else throw ConfigError("unknown action_mode: " + val);
    }
    else if (key == "action_enum_cap") cfg.action_enum_cap = detail::parse_long(key, val);
    else if (key == "grad_clip_norm") cfg.grad_clip_norm = detail::parse_double(key, val);
    else if (key == "dense_activation") {
      if (val == "identity") cfg.dense_activation = Activation::kIdentity;
      else if (val == "tanh") cfg.dense_activation = Activation::kTanh;
      else throw ConfigError("unknown dense_activation: " + val);
    }
    else if (key == "gain_db_min") cfg.gain_db_min = detail::parse_double(key, val);
    else if (key == "gain_db_max") cfg.gain_db_max = detail::parse_double(key, val);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_long(key, val));
    else throw ConfigError("unknown key: " + key);
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

inline std::string config_to_text(const ExperimentConfig& cfg) {
  using detail::fmt;
  const ScenarioConfig& sc = cfg.scenario;
  std::ostringstream os;
  os << "n_ues = " << sc.n_ues << "\n";
  os << "k_channels = " << sc.k_channels << "\n";
  os << "battery_capacity = " << sc.battery_capacity << "\n";
  os << "tx_power = " << sc.tx_power << "\n";
  os << "unit_power_dbm = " << fmt(sc.unit_power_dbm) << "\n";
  os << "bandwidth_hz = " << fmt(sc.bandwidth_hz) << "\n";
  os << "noise_dbm_per_hz = " << fmt(sc.noise_dbm_per_hz) << "\n";
  os << "cell_size_m = " << fmt(sc.cell_size_m) << "\n";
  os << "ue_speed_mps = " << fmt(sc.ue_speed_mps) << "\n";
  os << "energy_rate_min = " << fmt(sc.energy_rate_min) << "\n";
  os << "energy_rate_max = " << fmt(sc.energy_rate_max) << "\n";
  os << "energy_rates =";
  for (std::size_t i = 0; i < sc.energy_rates.size(); ++i)
    os << (i ? "," : " ") << fmt(sc.energy_rates[i]);
  os << "\n";
  os << "fading_enabled = " << (sc.fading_enabled ? "true" : "false") << "\n";
  os << "rate_unit_divisor = " << fmt(sc.rate_unit_divisor) << "\n";
  os << "energy_model = "
     << (sc.energy_model == EnergyModel::kPoisson ? "poisson"
         : sc.energy_model == EnergyModel::kFixed ? "fixed" : "cyclic")
     << "\n";
  os << "cycle_period = " << sc.cycle_period << "\n";
  os << "cycle_amount = " << sc.cycle_amount << "\n";
  os << "initial_battery = " << sc.initial_battery << "\n";
  os << "algorithm = " << cfg.algorithm << "\n";
  os << "gamma = " << fmt(cfg.gamma) << "\n";
  os << "gamma_pred = " << fmt(cfg.gamma_pred) << "\n";
  os << "alpha = " << fmt(cfg.alpha) << "\n";
  os << "beta = " << fmt(cfg.beta) << "\n";
  os << "batch_size = " << cfg.batch_size << "\n";
  os << "replay_capacity = " << cfg.replay_capacity << "\n";
  os << "lstm_units = " << cfg.lstm_units << "\n";
  os << "history_window = " << cfg.history_window << "\n";
  os << "epsilon_start = " << fmt(cfg.epsilon_start) << "\n";
  os << "epsilon_end = " << fmt(cfg.epsilon_end) << "\n";
  os << "epsilon_decay_steps = " << cfg.epsilon_decay_steps << "\n";
  os << "sync_period = " << cfg.sync_period << "\n";
  os << "episode_length = " << cfg.episode_length << "\n";
  os << "episodes = " << cfg.episodes << "\n";
  os << "total_steps = " << cfg.total_steps << "\n";
  os << "action_mode = "
     << (cfg.action_mode == ActionMode::kAuto ? "auto"
         : cfg.action_mode == ActionMode::kEnumerated ? "enumerated" : "factorized")
     << "\n";
  os << "action_enum_cap = " << cfg.action_enum_cap << "\n";
  os << "grad_clip_norm = " << fmt(cfg.grad_clip_norm) << "\n";
  os << "dense_activation = "
     << (cfg.dense_activation == Activation::kTanh ? "tanh" : "identity") << "\n";
  os << "gain_db_min = " << fmt(cfg.gain_db_min) << "\n";
  os << "gain_db_max = " << fmt(cfg.gain_db_max) << "\n";
  os << "seed = " << cfg.seed << "\n";
  return os.str();
}

inline void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open config for writing: " + path);
  os << config_to_text(cfg);
}

}  // namespace ehsched
