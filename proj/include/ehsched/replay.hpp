#pragma once

#include <stdexcept>
#include <vector>

#include "ehsched/common.hpp"
#include "ehsched/matrix.hpp"

namespace ehsched {

// Bounded FIFO experience store with uniform sampling (with replacement).
template <typename T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be >= 1");
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

  void push(T item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[head_] = std::move(item);  // overwrite the oldest slot
      head_ = (head_ + 1) % capacity_;
    }
  }

  const T& sample(Rng& rng) const {
    if (items_.empty()) throw std::logic_error("sampling from an empty replay buffer");
    const std::size_t i =
        std::uniform_int_distribution<std::size_t>(0, items_.size() - 1)(rng);
    return items_[i];
  }

  std::vector<const T*> sample_batch(int batch, Rng& rng) const {
    std::vector<const T*> out;
    out.reserve(batch);
    for (int i = 0; i < batch; ++i) out.push_back(&sample(rng));
    return out;
  }

  // Oldest-first snapshot; only the tests need it.
  std::vector<T> contents_in_order() const {
    std::vector<T> out;
    out.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i)
      out.push_back(items_[(head_ + i) % items_.size()]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest slot once full
  std::vector<T> items_;
};

// Piecewise-linear exploration schedule, constant after the decay horizon.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  long decay_steps = 10000;

  double at(long step) const {
    if (step >= decay_steps) return end;
    if (step < 0) return start;
    return start + (end - start) * static_cast<double>(step) /
                       static_cast<double>(decay_steps);
  }
};

// With probability epsilon a uniform action, otherwise the argmax with ties
// resolved to the lowest index.
inline int epsilon_greedy_select(const Vec& q_values, double epsilon, Rng& rng) {
  if (q_values.empty()) throw std::invalid_argument("epsilon_greedy: empty q row");
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < epsilon) {
    return static_cast<int>(std::uniform_int_distribution<std::size_t>(
        0, q_values.size() - 1)(rng));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < q_values.size(); ++i)
    if (q_values[i] > q_values[best]) best = i;
  return static_cast<int>(best);
}

// Sliding memories: scheduling indicators (N x W), predicted batteries
// (N x W) and reported true batteries of the scheduled set (K x W). Columns
// run oldest to newest; an update shifts everything one column left.
class HistoryWindow {
 public:
  HistoryWindow() = default;
  HistoryWindow(int n, int k, int width)
      : n_(n), k_(k), w_(width), scheduled_(n, width), predicted_(n, width),
        reported_(k, width) {
    if (n < 1 || k < 1 || width < 1)
      throw ConfigError("history window dimensions must be positive");
  }

  int width() const { return w_; }
  const Matrix& scheduled() const { return scheduled_; }
  const Matrix& predicted() const { return predicted_; }
  const Matrix& reported() const { return reported_; }

  void update(const std::vector<int>& schedule_col, const Vec& predicted_col,
              const Vec& reported_col) {
    if (static_cast<int>(schedule_col.size()) != n_ ||
        static_cast<int>(predicted_col.size()) != n_ ||
        static_cast<int>(reported_col.size()) != k_)
      throw std::invalid_argument("history update: column dimension mismatch");
    shift_left(scheduled_);
    shift_left(predicted_);
    shift_left(reported_);
    for (int i = 0; i < n_; ++i) {
      scheduled_(i, w_ - 1) = schedule_col[i];
      predicted_(i, w_ - 1) = predicted_col[i];
    }
    for (int i = 0; i < k_; ++i) reported_(i, w_ - 1) = reported_col[i];
  }

  // One network input per column: [schedule ; predicted/C ; reported/C].
  std::vector<Vec> to_sequence(double capacity) const {
    std::vector<Vec> seq(w_, Vec(2 * n_ + k_));
    for (int t = 0; t < w_; ++t) {
      Vec& x = seq[t];
      for (int i = 0; i < n_; ++i) {
        x[i] = scheduled_(i, t);
        x[n_ + i] = predicted_(i, t) / capacity;
      }
      for (int i = 0; i < k_; ++i) x[2 * n_ + i] = reported_(i, t) / capacity;
    }
    return seq;
  }

 private:
  static void shift_left(Matrix& m) {
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c + 1 < m.cols(); ++c) m(r, c) = m(r, c + 1);
  }

  int n_ = 0, k_ = 0, w_ = 0;
  Matrix scheduled_, predicted_, reported_;
};

inline HistoryWindow history_update(HistoryWindow history,
                                    const std::vector<int>& schedule_col,
                                    const Vec& predicted_col, const Vec& reported_col) {
  history.update(schedule_col, predicted_col, reported_col);
  return history;
}

}  // namespace ehsched
