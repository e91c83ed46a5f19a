#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace ehsched {

// Malformed or out-of-range configuration input. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite quantity. CLI maps this to exit code 3.
struct NumericalFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An exact-solver instance exceeds its tractable size. CLI maps this to exit code 4.
struct InfeasibleInstance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// splitmix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from one master seed, so the environment,
// the agent, and evaluation rollouts never share a generator.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(master ^ mix_seed(stream));
}

}  // namespace ehsched
