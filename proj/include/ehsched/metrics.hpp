#pragma once

#include <cstdio>
#include <deque>
#include <fstream>
#include <string>
#include <vector>

#include "ehsched/common.hpp"

namespace ehsched {

struct MetricsRecord {
  long step = 0;
  long episode = 0;
  double reward = 0.0;
  double reward_smooth = 0.0;
  double p_loss = 0.0;
  double train_loss = 0.0;
  double epsilon = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "step,episode,reward,reward_smooth,p_loss,train_loss,epsilon";

// Trailing mean with an expanding head: element i averages the last
// min(i+1, window) elements.
inline std::vector<double> moving_average(const std::vector<double>& series,
                                          int window = 200) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t lo = i + 1 >= static_cast<std::size_t>(window)
                               ? i + 1 - static_cast<std::size_t>(window)
                               : 0;
    double acc = 0.0;
    for (std::size_t j = lo; j <= i; ++j) acc += series[j];
    out[i] = acc / static_cast<double>(i - lo + 1);
  }
  return out;
}

// Streaming counterpart of moving_average. Recomputes the window sum on every
// push, in the same order, so the two produce bit-identical values.
class MovingMean {
 public:
  explicit MovingMean(int window = 200) : window_(window) {
    if (window < 1) throw std::invalid_argument("MovingMean: window must be >= 1");
  }

  double push(double v) {
    buf_.push_back(v);
    if (static_cast<int>(buf_.size()) > window_) buf_.pop_front();
    double acc = 0.0;
    for (double x : buf_) acc += x;
    last_ = acc / static_cast<double>(buf_.size());
    return last_;
  }

  double value() const { return last_; }

 private:
  int window_;
  std::deque<double> buf_;
  double last_ = 0.0;
};

inline std::string format_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// One CSV file per run. Rows stream out as training progresses; a run that
// dies part-way leaves a trailing truncation marker.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path) : os_(path) {
    if (!os_) throw ConfigError("cannot open metrics file for writing: " + path);
    os_ << kMetricsHeader << "\n";
  }

  void write(const MetricsRecord& r) {
    os_ << r.step << ',' << r.episode << ',' << format_metric(r.reward) << ','
        << format_metric(r.reward_smooth) << ',' << format_metric(r.p_loss) << ','
        << format_metric(r.train_loss) << ',' << format_metric(r.epsilon) << "\n";
  }

  void mark_truncated() {
    os_ << "# truncated\n";
    os_.flush();
  }

 private:
  std::ofstream os_;
};

// Parses a metrics CSV back into records; used by the comparison tooling and
// the determinism checks.
inline std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open metrics file: " + path);
  std::string line;
  if (!std::getline(is, line) || line != kMetricsHeader)
    throw ConfigError("bad metrics header in " + path);
  std::vector<MetricsRecord> out;
  while (std::getline(is, line)) {
    if (line.rfind("#", 0) == 0) continue;
    MetricsRecord r;
    if (std::sscanf(line.c_str(), "%ld,%ld,%lf,%lf,%lf,%lf,%lf", &r.step, &r.episode,
                    &r.reward, &r.reward_smooth, &r.p_loss, &r.train_loss,
                    &r.epsilon) != 7)
      throw ConfigError("bad metrics row in " + path + ": " + line);
    out.push_back(r);
  }
  return out;
}

}  // namespace ehsched
