#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "ehsched/env.hpp"

using namespace ehsched;

namespace {

// Scenario with unit bandwidth and unit divisor so per-UE rates are
// log2(1 + SNR) directly.
ScenarioConfig normalized_scenario(int n, int k) {
  ScenarioConfig cfg;
  cfg.n_ues = n;
  cfg.k_channels = k;
  cfg.battery_capacity = 10;
  cfg.tx_power = 2;
  cfg.bandwidth_hz = 1.0;
  cfg.rate_unit_divisor = 1.0;
  cfg.fading_enabled = false;
  cfg.energy_rates.assign(n, 1.0);
  return cfg;
}

// Gain that produces the requested SNR under the given scenario.
double gain_for_snr(const ScenarioConfig& cfg, double snr) {
  return snr * cfg.noise_power_watts() / cfg.tx_power_watts();
}

std::vector<int> random_subset(int n, int k, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int j = 0; j < k; ++j) {
    const int swap = j + static_cast<int>(
        std::uniform_int_distribution<int>(0, n - 1 - j)(rng));
    std::swap(idx[j], idx[swap]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

TEST_CASE("pathloss follows the urban formula with a 1 m clamp", "[env]") {
  CHECK(pathloss_db(1.0) == Catch::Approx(128.1).margin(1e-12));
  CHECK(pathloss_db(0.1) == Catch::Approx(90.5).margin(1e-12));
  CHECK(pathloss_db(0.25) == Catch::Approx(105.46254432606861).margin(1e-9));
  CHECK(pathloss_db(0.0) == pathloss_db(0.001));
  CHECK(pathloss_db(0.0005) == pathloss_db(0.001));
}

TEST_CASE("channel gain scales pathloss by the fading sample", "[env]") {
  const Vec2 bs{0.0, 0.0};
  const Vec2 ue{1000.0, 0.0};
  CHECK(channel_gain(ue, bs, 1.0) ==
        Catch::Approx(1.5488166189124813e-13).epsilon(1e-12));
  CHECK(channel_gain(ue, bs, 0.5) == Catch::Approx(0.5 * channel_gain(ue, bs, 1.0)));

  // Monte-Carlo: unit-mean fading leaves the mean gain at the pathloss value.
  Rng rng(99);
  std::exponential_distribution<double> fading(1.0);
  const double base = channel_gain(ue, bs, 1.0);
  double acc = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) acc += channel_gain(ue, bs, fading(rng));
  const double mean = acc / n;
  const double three_se = 3.0 * base / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean - base) <= three_se);
}

TEST_CASE("random walk keeps UEs inside the cell", "[env]") {
  Rng rng(7);
  const Vec2 still = random_walk_step({10.0, 10.0}, 0.0, 500.0, rng);
  CHECK(still.x == 10.0);
  CHECK(still.y == 10.0);

  // Interior point: displacement norm is exactly the speed.
  for (int i = 0; i < 100; ++i) {
    const Vec2 from{250.0, 250.0};
    const Vec2 to = random_walk_step(from, 1.5, 500.0, rng);
    CHECK(distance_m(from, to) == Catch::Approx(1.5).margin(1e-12));
  }

  Vec2 pos{0.5, 499.5};
  for (int i = 0; i < 1000000; ++i) {
    pos = random_walk_step(pos, 3.0, 500.0, rng);
    if (pos.x < 0.0 || pos.x > 500.0 || pos.y < 0.0 || pos.y > 500.0) {
      FAIL("walk left the cell at step " << i);
    }
  }
  SUCCEED("walk never left the cell");
}

TEST_CASE("poisson arrivals have the configured moments", "[env]") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) CHECK(sample_poisson(0.0, rng) == 0);

  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_poisson(1.0, rng);
  const double mean = sum / n;
  // Var = 1 at rate 1, so 3 standard errors of the mean:
  CHECK(std::abs(mean - 1.0) <= 3.0 / std::sqrt(static_cast<double>(n)));

  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_poisson(2.0, rng);
    s += x;
    ss += x * x;
  }
  const double m = s / n;
  const double var = (ss - n * m * m) / (n - 1);
  // sd of the variance estimator: sqrt((mu4 - sigma^4)/n), mu4 = lambda(1+3lambda).
  const double three_se = 3.0 * std::sqrt((14.0 - 4.0) / n);
  CHECK(std::abs(var - 2.0) <= three_se);
}

TEST_CASE("transmit indicator is a threshold at the transmit power", "[env]") {
  CHECK(transmit_indicator(2, 2) == 1);
  CHECK(transmit_indicator(1, 2) == 0);
  CHECK(transmit_indicator(0, 2) == 0);
}

TEST_CASE("battery recursion clamps at capacity and drains on success", "[env]") {
  CHECK(battery_step(5, 0, 1, 1, 2, 10) == 3);
  CHECK(battery_step(9, 4, 0, 0, 2, 10) == 10);
  CHECK(battery_step(1, 3, 0, 1, 2, 10) == 4);  // failed transmission consumes nothing
  CHECK_THROWS_AS(battery_step(1, 0, 1, 1, 2, 10), std::logic_error);
}

TEST_CASE("sum rate adds log terms of the feasible selected UEs", "[env]") {
  ScenarioConfig cfg = normalized_scenario(3, 2);
  ChannelSnapshot ch;
  ch.gains = {gain_for_snr(cfg, 1.0), gain_for_snr(cfg, 3.0), gain_for_snr(cfg, 7.0)};

  AccessAction one{{0}};
  CHECK(sum_rate(one, {1}, ch, cfg) == Catch::Approx(1.0).margin(1e-12));

  AccessAction two{{1, 2}};
  CHECK(sum_rate(two, {1, 1}, ch, cfg) == Catch::Approx(5.0).margin(1e-12));
  CHECK(sum_rate(two, {0, 0}, ch, cfg) == 0.0);

  // Monotone in each gain and in the transmit power.
  const double base = sum_rate(two, {1, 1}, ch, cfg);
  ch.gains[1] *= 2.0;
  CHECK(sum_rate(two, {1, 1}, ch, cfg) > base);
  cfg.tx_power = 4;
  cfg.battery_capacity = 10;
  CHECK(sum_rate(two, {1, 1}, ch, cfg) > base);
}

TEST_CASE("prediction loss is the euclidean gap on the selected set", "[env]") {
  CHECK(prediction_loss({3.0, 4.0}, {3.0, 4.0}) == 0.0);
  CHECK(prediction_loss({3.0, 0.0}, {0.0, 4.0}) == Catch::Approx(5.0));
  CHECK(prediction_loss({2.0}, {2.0 + 0.25}) == Catch::Approx(0.25));
  CHECK(prediction_loss({7.0}, {7.0 - 0.5}) == Catch::Approx(0.5));
  CHECK_THROWS_AS(prediction_loss({1.0, 2.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("starved cell earns nothing", "[env]") {
  ScenarioConfig cfg = normalized_scenario(3, 1);
  cfg.energy_rates.assign(3, 0.0);
  cfg.initial_battery = 1;  // below tx_power = 2
  SimEnv env(cfg, 5);
  for (int t = 0; t < 100; ++t) {
    const StepOutcome out = env.step(AccessAction{{t % 3}});
    CHECK(out.sum_rate == 0.0);
  }
}

TEST_CASE("five-slot hand trace of batteries, flags and reports", "[env]") {
  ScenarioConfig cfg = normalized_scenario(2, 1);
  cfg.battery_capacity = 4;
  cfg.tx_power = 2;
  cfg.initial_battery = 1;
  cfg.energy_model = EnergyModel::kFixed;
  cfg.energy_rates = {1.0, 0.0};
  cfg.ue_speed_mps = 0.0;

  SimEnv env(cfg, 3, {{100.0, 250.0}, {250.0, 250.0}});
  const double r0 = sum_rate(AccessAction{{0}}, {1}, env.state().channels, cfg);
  REQUIRE(r0 > 0.0);

  // UE0 is always scheduled and harvests 1 unit per slot; UE1 harvests nothing.
  // From B = (1,1): transmit succeeds on every second slot.
  const int expect_flags[5] = {0, 1, 0, 1, 0};
  const int expect_report[5] = {1, 2, 1, 2, 1};
  const int expect_b0_after[5] = {2, 1, 2, 1, 2};
  for (int t = 0; t < 5; ++t) {
    const StepOutcome out = env.step(AccessAction{{0}});
    CHECK(out.transmit_flags[0] == expect_flags[t]);
    CHECK(out.true_batteries_selected[0] == expect_report[t]);
    CHECK(out.sum_rate == (expect_flags[t] ? Catch::Approx(r0) : Catch::Approx(0.0)));
    CHECK(env.state().ues[0].battery == expect_b0_after[t]);
    CHECK(env.state().ues[1].battery == 1);
  }
}

TEST_CASE("fuzzed steps never leave the battery range", "[env]") {
  ScenarioConfig cfg;
  cfg.n_ues = 5;
  cfg.k_channels = 2;
  cfg.battery_capacity = 6;
  cfg.tx_power = 3;
  cfg.energy_rate_min = 0.2;
  cfg.energy_rate_max = 2.0;
  SimEnv env(cfg, 21);
  Rng actions(22);
  for (int t = 0; t < 20000; ++t) {
    env.step(AccessAction{random_subset(5, 2, actions)});
    for (const auto& ue : env.state().ues) {
      REQUIRE(ue.battery >= 0);
      REQUIRE(ue.battery <= cfg.battery_capacity);
    }
  }
}

TEST_CASE("energy accounting is exact when the capacity never binds", "[env]") {
  ScenarioConfig cfg;
  cfg.n_ues = 4;
  cfg.k_channels = 2;
  cfg.battery_capacity = 1000000;  // unreachable over this horizon
  cfg.tx_power = 2;
  cfg.initial_battery = 3;
  cfg.energy_rate_min = 0.5;
  cfg.energy_rate_max = 1.5;
  SimEnv env(cfg, 33);
  ScriptedTrace trace;
  env.record_to(&trace);

  std::vector<long> harvested(4, 0), spent(4, 0);
  Rng actions(34);
  const int horizon = 2000;
  for (int t = 0; t < horizon; ++t) {
    const AccessAction a{random_subset(4, 2, actions)};
    const StepOutcome out = env.step(a);
    for (std::size_t j = 0; j < a.selected.size(); ++j)
      spent[a.selected[j]] += out.transmit_flags[j] * cfg.tx_power;
    for (int i = 0; i < 4; ++i) harvested[i] += trace.energy.back()[i];
  }
  for (int i = 0; i < 4; ++i)
    CHECK(env.state().ues[i].battery == 3 + harvested[i] - spent[i]);
}

TEST_CASE("same seed reproduces the same rollout", "[env]") {
  ScenarioConfig cfg;
  cfg.n_ues = 4;
  cfg.k_channels = 2;
  cfg.battery_capacity = 8;
  cfg.tx_power = 2;
  SimEnv a(cfg, 77), b(cfg, 77);
  Rng act_a(5), act_b(5);
  for (int t = 0; t < 50; ++t) {
    const auto sel = random_subset(4, 2, act_a);
    (void)random_subset(4, 2, act_b);
    const StepOutcome oa = a.step(AccessAction{sel});
    const StepOutcome ob = b.step(AccessAction{sel});
    REQUIRE(oa.sum_rate == ob.sum_rate);
    REQUIRE(a.state().batteries() == b.state().batteries());
    REQUIRE(a.state().channels.gains == b.state().channels.gains);
  }
}

TEST_CASE("identical realization regardless of the acting policy", "[env]") {
  ScenarioConfig cfg;
  cfg.n_ues = 4;
  cfg.k_channels = 1;
  cfg.battery_capacity = 5;
  cfg.tx_power = 2;
  SimEnv a(cfg, 123), b(cfg, 123);
  ScriptedTrace ta, tb;
  a.record_to(&ta);
  b.record_to(&tb);
  Rng actions(9);
  for (int t = 0; t < 200; ++t) {
    a.step(AccessAction{{t % 4}});
    b.step(AccessAction{random_subset(4, 1, actions)});
  }
  CHECK(ta.energy == tb.energy);
  CHECK(ta.gains == tb.gains);
}
