// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gradperm {

/// One SplitMix64 step. Advances `state` and returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Child-seed derivation for replicate/simulation streams.
///
/// Collision free in `index` for a fixed `master`: the index enters through
/// an odd-multiplier bijection and the splitmix64 finalizer is itself a
/// bijection, so distinct indices always map to distinct seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Seeded random stream with the distribution algorithms pinned down in this
/// library, so that results never depend on standard-library implementation
/// details. The engine is std::mt19937_64, which the standard fully
/// specifies.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second deviate is cached.
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Unbiased integer in [0, n). Requires n >= 1.
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates random permutation of {0, ..., n-1}.
  std::vector<int> permutation(int n);

  void shuffle(std::vector<int>& values);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gradperm
