#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ehsched/common.hpp"

namespace ehsched {

// Binomial coefficient, saturating at uint64 max instead of overflowing.
inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    if (r > std::numeric_limits<std::uint64_t>::max() / num)
      return std::numeric_limits<std::uint64_t>::max();
    r = r * num / static_cast<std::uint64_t>(i);
  }
  return r;
}

// Bijection between sorted K-subsets of {0..N-1} and their lexicographic rank.
class SubsetCodec {
 public:
  SubsetCodec(int n, int k, std::uint64_t cap = 4096) : n_(n), k_(k) {
    if (k < 1 || k > n) throw ConfigError("subset codec requires 1 <= K <= N");
    const std::uint64_t count = binomial(n, k);
    if (count > cap)
      throw ConfigError("enumerated action space C(N,K) exceeds the cap of " +
                        std::to_string(cap));
    size_ = static_cast<int>(count);
  }

  int n() const { return n_; }
  int k() const { return k_; }
  int size() const { return size_; }

  int encode(const std::vector<int>& subset) const {
    if (static_cast<int>(subset.size()) != k_)
      throw std::invalid_argument("encode: subset size must be K");
    std::uint64_t rank = 0;
    int next = 0;
    for (int i = 0; i < k_; ++i) {
      const int s = subset[i];
      if (s < next || s >= n_)
        throw std::invalid_argument("encode: subset must be sorted, distinct, in range");
      for (int v = next; v < s; ++v) rank += binomial(n_ - 1 - v, k_ - 1 - i);
      next = s + 1;
    }
    return static_cast<int>(rank);
  }

  std::vector<int> decode(int index) const {
    if (index < 0 || index >= size_)
      throw std::out_of_range("decode: action index out of range");
    std::vector<int> subset(k_);
    std::uint64_t rank = static_cast<std::uint64_t>(index);
    int v = 0;
    for (int i = 0; i < k_; ++i) {
      for (;; ++v) {
        const std::uint64_t below = binomial(n_ - 1 - v, k_ - 1 - i);
        if (rank < below) break;
        rank -= below;
      }
      subset[i] = v++;
    }
    return subset;
  }

 private:
  int n_;
  int k_;
  int size_;
};

// Uniformly random K-subset, sorted ascending.
inline std::vector<int> random_subset(int n, int k, Rng& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int j = 0; j < k; ++j) {
    const int swap = j + std::uniform_int_distribution<int>(0, n - 1 - j)(rng);
    std::swap(idx[j], idx[swap]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Indices of the K largest scores, ties to the lower index, sorted ascending.
inline std::vector<int> top_k_indices(const std::vector<double>& scores, int k) {
  std::vector<int> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace ehsched
