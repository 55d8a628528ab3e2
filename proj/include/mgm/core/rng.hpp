//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_CORE_RNG_HPP_
#define MGM_CORE_RNG_HPP_

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace mgm {

// Self-contained RNG so results are reproducible across standard libraries.
// xoshiro256** seeded through splitmix64; no std distributions anywhere.

/// One deterministic random stream. Copyable; state is four 64-bit words.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, n). n must be > 0. Unbiased (rejection sampling).
  std::uint64_t uniform_below(std::uint64_t n);

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via Box-Muller (both values used, cached).
  double normal();

  /// Fisher-Yates shuffle, descending index order.
  template <class T>
  void shuffle(std::vector<T> &v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct values from [0, n), ascending. k <= n.
  std::vector<int> sample_without_replacement(int n, int k);

  std::array<std::uint64_t, 4> state() const { return state_; }
  void restore(const std::array<std::uint64_t, 4> &s) {
    state_ = s;
    have_cached_normal_ = false;
  }

 private:
  std::array<std::uint64_t, 4> state_;
  double cached_normal_ = 0.0;
  bool have_cached_normal_ = false;
};

/// Derives independent named streams from one master seed, so e.g. the
/// masking stream is unaffected by how many draws the init stream consumed.
class SeedSplitter {
 public:
  explicit SeedSplitter(std::uint64_t master_seed) : master_(master_seed) { }

  RngStream stream(std::string_view name) const;
  std::uint64_t stream_seed(std::string_view name) const;
  std::uint64_t master() const { return master_; }

 private:
  std::uint64_t master_;
};

/// FNV-1a over arbitrary bytes; used for stream naming and fingerprints.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace mgm

#endif  // MGM_CORE_RNG_HPP_
