#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ehsched/common.hpp"
#include "ehsched/matrix.hpp"

namespace ehsched {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance_m(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

enum class EnergyModel {
  kPoisson,  // independent Poisson arrivals, mean rate per UE
  kFixed,    // round(rate) units every slot
  kCyclic,   // cycle_amount units whenever t % period == ue % period
};

// Physical scenario knobs. Everything a simulation run needs besides the seed.
struct ScenarioConfig {
  int n_ues = 30;
  int k_channels = 3;
  int battery_capacity = 5;  // units
  int tx_power = 2;          // units per transmission
  double unit_power_dbm = 5.0;
  double bandwidth_hz = 5e6;
  double noise_dbm_per_hz = -174.0;
  double cell_size_m = 500.0;
  double ue_speed_mps = 1.0;
  double energy_rate_min = 0.8;  // per-UE rates drawn uniformly from this range
  double energy_rate_max = 1.2;
  std::vector<double> energy_rates;  // explicit per-UE rates; empty -> draw from range
  bool fading_enabled = true;
  double rate_unit_divisor = 1e6;
  EnergyModel energy_model = EnergyModel::kPoisson;
  int cycle_period = 0;  // 0 -> n_ues
  int cycle_amount = 1;
  int initial_battery = 0;

  void validate() const {
    if (n_ues < 1) throw ConfigError("n_ues must be >= 1");
    if (k_channels < 1 || k_channels > n_ues)
      throw ConfigError("k_channels must satisfy 1 <= K <= N");
    if (battery_capacity < 1) throw ConfigError("battery_capacity must be >= 1");
    if (tx_power < 1 || tx_power > battery_capacity)
      throw ConfigError("tx_power must satisfy 1 <= P <= C");
    if (bandwidth_hz <= 0.0) throw ConfigError("bandwidth_hz must be > 0");
    if (rate_unit_divisor <= 0.0) throw ConfigError("rate_unit_divisor must be > 0");
    if (cell_size_m <= 0.0) throw ConfigError("cell_size_m must be > 0");
    if (ue_speed_mps < 0.0) throw ConfigError("ue_speed_mps must be >= 0");
    if (energy_rate_min < 0.0 || energy_rate_max < energy_rate_min)
      throw ConfigError("energy rate range must satisfy 0 <= min <= max");
    for (double r : energy_rates)
      if (r < 0.0) throw ConfigError("energy_rates entries must be >= 0");
    if (!energy_rates.empty() && static_cast<int>(energy_rates.size()) != n_ues)
      throw ConfigError("energy_rates must list one rate per UE");
    if (cycle_period < 0) throw ConfigError("cycle_period must be >= 0");
    if (cycle_amount < 0) throw ConfigError("cycle_amount must be >= 0");
    if (initial_battery < 0 || initial_battery > battery_capacity)
      throw ConfigError("initial_battery must lie in [0, C]");
  }

  double noise_power_watts() const {
    const double dbm = noise_dbm_per_hz + 10.0 * std::log10(bandwidth_hz);
    return std::pow(10.0, dbm / 10.0) / 1000.0;
  }

  // Linear transmit power: tx_power units, each worth unit_power_dbm.
  double tx_power_watts() const {
    return tx_power * std::pow(10.0, unit_power_dbm / 10.0) / 1000.0;
  }
};

struct UeState {
  Vec2 position;
  int battery = 0;        // units, always in [0, C]
  double energy_rate = 0; // mean arrival rate, units per slot
};

struct ChannelSnapshot {
  Vec gains;  // linear power gains, one per UE, all > 0
};

// K distinct UE indices, kept sorted ascending.
struct AccessAction {
  std::vector<int> selected;

  std::vector<int> indicator(int n_ues) const {
    std::vector<int> ind(n_ues, 0);
    for (int i : selected) ind[i] = 1;
    return ind;
  }
};

struct StepOutcome {
  double sum_rate = 0.0;                    // after division by rate_unit_divisor
  std::vector<int> transmit_flags;          // aligned with action.selected
  std::vector<int> true_batteries_selected; // pre-step batteries of the selected UEs
};

struct SystemState {
  std::vector<UeState> ues;
  ChannelSnapshot channels;
  long time = 0;

  std::vector<int> batteries() const {
    std::vector<int> b(ues.size());
    for (std::size_t i = 0; i < ues.size(); ++i) b[i] = ues[i].battery;
    return b;
  }
};

// 3GPP-style pathloss with the distance in kilometers, clamped at 1 m.
inline double pathloss_db(double distance_km) {
  const double d = std::max(distance_km, 0.001);
  return 128.1 + 37.6 * std::log10(d);
}

inline double channel_gain(const Vec2& ue_position, const Vec2& bs_position,
                           double fading_sample) {
  const double d_km = distance_m(ue_position, bs_position) / 1000.0;
  return std::pow(10.0, -pathloss_db(d_km) / 10.0) * fading_sample;
}

// One slot of random-walk mobility: fixed displacement in a uniform direction,
// specular reflection at the cell edges.
inline Vec2 random_walk_step(const Vec2& position, double speed, double cell_size_m,
                             Rng& rng) {
  if (speed == 0.0) return position;
  const double angle =
      std::uniform_real_distribution<double>(0.0, 2.0 * 3.14159265358979323846)(rng);
  double x = position.x + speed * std::cos(angle);
  double y = position.y + speed * std::sin(angle);
  while (x < 0.0 || x > cell_size_m) x = x < 0.0 ? -x : 2.0 * cell_size_m - x;
  while (y < 0.0 || y > cell_size_m) y = y < 0.0 ? -y : 2.0 * cell_size_m - y;
  return {x, y};
}

inline int sample_poisson(double rate, Rng& rng) {
  if (rate <= 0.0) return 0;
  return std::poisson_distribution<int>(rate)(rng);
}

inline int transmit_indicator(int battery, int tx_power) {
  return battery >= tx_power ? 1 : 0;
}

// Battery recursion: arrivals harvested this slot land after the transmission,
// so they become usable one slot later. A scheduled transmission that the
// battery cannot cover is a caller bug, not a runtime condition.
inline int battery_step(int battery, int arrival, int z, int scheduled, int tx_power,
                        int capacity) {
  const int drain = z * scheduled * tx_power;
  if (drain > battery)
    throw std::logic_error("battery_step: transmission exceeds stored energy");
  return std::min(capacity, battery + arrival - drain);
}

inline double sum_rate(const AccessAction& action, const std::vector<int>& flags,
                       const ChannelSnapshot& channels, const ScenarioConfig& cfg) {
  const double p_w = cfg.tx_power_watts();
  const double noise_w = cfg.noise_power_watts();
  double total = 0.0;
  for (std::size_t k = 0; k < action.selected.size(); ++k) {
    if (!flags[k]) continue;
    const double snr = p_w * channels.gains[action.selected[k]] / noise_w;
    total += cfg.bandwidth_hz * std::log2(1.0 + snr);
  }
  return total / cfg.rate_unit_divisor;
}

// Euclidean distance between reported and predicted battery levels.
inline double prediction_loss(const Vec& true_batteries, const Vec& predicted) {
  if (true_batteries.size() != predicted.size())
    throw std::invalid_argument("prediction_loss: length mismatch");
  double ss = 0.0;
  for (std::size_t i = 0; i < true_batteries.size(); ++i) {
    const double d = true_batteries[i] - predicted[i];
    ss += d * d;
  }
  return std::sqrt(ss);
}

// Realized randomness of a rollout, consumed by the offline solvers.
// gains[t] are the channel gains seen when acting at slot t; energy[t] are the
// arrivals harvested during slot t (usable from t+1 on).
struct ScriptedTrace {
  std::vector<Vec> gains;
  std::vector<std::vector<int>> energy;

  int horizon() const { return static_cast<int>(gains.size()); }
};

// The uplink cell. One instance owns one seeded generator; every draw the
// environment makes is independent of the policy acting on it, so two runs
// with the same seed see identical energy and channel realizations no matter
// which scheduler they use.
class SimEnv {
 public:
  SimEnv(const ScenarioConfig& cfg, std::uint64_t seed)
      : SimEnv(cfg, seed, std::vector<Vec2>{}) {}

  SimEnv(const ScenarioConfig& cfg, std::uint64_t seed, std::vector<Vec2> positions)
      : cfg_(cfg), rng_(derive_seed(seed, 0x0e5f)) {
    cfg_.validate();
    if (!positions.empty() && static_cast<int>(positions.size()) != cfg_.n_ues)
      throw ConfigError("explicit positions must list one per UE");
    fixed_positions_ = std::move(positions);
    bs_ = {cfg_.cell_size_m / 2.0, cfg_.cell_size_m / 2.0};
    rates_ = cfg_.energy_rates;
    if (rates_.empty()) {
      rates_.resize(cfg_.n_ues);
      std::uniform_real_distribution<double> d(cfg_.energy_rate_min, cfg_.energy_rate_max);
      for (double& r : rates_) r = d(rng_);
    }
    place_ues();
  }

  const ScenarioConfig& config() const { return cfg_; }
  const SystemState& state() const { return state_; }
  const Vec2& bs_position() const { return bs_; }
  const std::vector<double>& energy_rates() const { return rates_; }

  // When set, every step appends its realized gains and arrivals.
  void record_to(ScriptedTrace* trace) { trace_ = trace; }

  // Batteries back to the configured level, clock to zero, history forgotten.
  // Optionally re-places the UEs (fresh draws from this env's own stream).
  void reset_episode(bool replace_ues) {
    if (replace_ues && fixed_positions_.empty()) {
      for (auto& ue : state_.ues) ue.position = draw_position();
    }
    for (auto& ue : state_.ues) ue.battery = cfg_.initial_battery;
    state_.time = 0;
    refresh_channels();
  }

  StepOutcome step(const AccessAction& action) {
    validate_action(action);
    const int k = static_cast<int>(action.selected.size());
    StepOutcome out;
    out.transmit_flags.resize(k);
    out.true_batteries_selected.resize(k);
    for (int j = 0; j < k; ++j) {
      const int i = action.selected[j];
      out.true_batteries_selected[j] = state_.ues[i].battery;
      out.transmit_flags[j] = transmit_indicator(state_.ues[i].battery, cfg_.tx_power);
    }
    out.sum_rate = sum_rate(action, out.transmit_flags, state_.channels, cfg_);

    if (trace_) trace_->gains.push_back(state_.channels.gains);

    std::vector<int> arrivals(cfg_.n_ues);
    for (int i = 0; i < cfg_.n_ues; ++i) arrivals[i] = sample_energy(i);
    if (trace_) trace_->energy.push_back(arrivals);

    const std::vector<int> scheduled = action.indicator(cfg_.n_ues);
    for (int i = 0; i < cfg_.n_ues; ++i) {
      const int z = scheduled[i] ? transmit_indicator(state_.ues[i].battery, cfg_.tx_power) : 0;
      state_.ues[i].battery = battery_step(state_.ues[i].battery, arrivals[i], z,
                                           scheduled[i], cfg_.tx_power,
                                           cfg_.battery_capacity);
    }

    if (fixed_positions_.empty() && cfg_.ue_speed_mps > 0.0) {
      for (auto& ue : state_.ues)
        ue.position = random_walk_step(ue.position, cfg_.ue_speed_mps, cfg_.cell_size_m, rng_);
    }
    ++state_.time;
    refresh_channels();
    return out;
  }

 private:
  int sample_energy(int ue) {
    switch (cfg_.energy_model) {
      case EnergyModel::kPoisson:
        return sample_poisson(rates_[ue], rng_);
      case EnergyModel::kFixed:
        return static_cast<int>(std::lround(rates_[ue]));
      case EnergyModel::kCyclic: {
        const int period = cfg_.cycle_period > 0 ? cfg_.cycle_period : cfg_.n_ues;
        return (state_.time % period) == (ue % period) ? cfg_.cycle_amount : 0;
      }
    }
    return 0;
  }

  void place_ues() {
    state_.ues.assign(cfg_.n_ues, UeState{});
    for (int i = 0; i < cfg_.n_ues; ++i) {
      state_.ues[i].position =
          fixed_positions_.empty() ? draw_position() : fixed_positions_[i];
      state_.ues[i].battery = cfg_.initial_battery;
      state_.ues[i].energy_rate = rates_[i];
    }
    state_.time = 0;
    refresh_channels();
  }

  Vec2 draw_position() {
    std::uniform_real_distribution<double> d(0.0, cfg_.cell_size_m);
    const double x = d(rng_);
    const double y = d(rng_);
    return {x, y};
  }

  void refresh_channels() {
    state_.channels.gains.resize(cfg_.n_ues);
    for (int i = 0; i < cfg_.n_ues; ++i) {
      double fading = 1.0;
      if (cfg_.fading_enabled)
        fading = std::exponential_distribution<double>(1.0)(rng_);
      state_.channels.gains[i] =
          channel_gain(state_.ues[i].position, bs_, fading);
    }
  }

  void validate_action(const AccessAction& action) const {
    if (static_cast<int>(action.selected.size()) != cfg_.k_channels)
      throw std::invalid_argument("action must select exactly K UEs");
    for (std::size_t j = 0; j < action.selected.size(); ++j) {
      const int i = action.selected[j];
      if (i < 0 || i >= cfg_.n_ues)
        throw std::invalid_argument("action index out of range");
      if (j > 0 && action.selected[j - 1] >= i)
        throw std::invalid_argument("action indices must be sorted and distinct");
    }
  }

  ScenarioConfig cfg_;
  Rng rng_;
  SystemState state_;
  Vec2 bs_;
  std::vector<double> rates_;
  std::vector<Vec2> fixed_positions_;
  ScriptedTrace* trace_ = nullptr;
};

}  // namespace ehsched
