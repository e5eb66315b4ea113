#pragma once

// Counter-based random streams.
//
// Every stochastic draw in the toolkit is addressed by a key derived from
// (seed, purpose, indices...) and a running counter, so results never depend
// on the order in which parallel work items are scheduled.

#include <cstdint>
#include <initializer_list>

namespace gbq {

std::uint64_t splitmix64(std::uint64_t x);

/// Fold a list of words into a single stream key.
std::uint64_t derive_key(std::initializer_list<std::uint64_t> words);

/// Purpose tags keep streams for different consumers disjoint.
enum class Stream : std::uint64_t {
  Noise = 0x6e6f697365ULL,
  Jitter = 0x6a6974746572ULL,
  Power = 0x706f776572ULL,
  Split = 0x73706c6974ULL,
  Init = 0x696e6974ULL,
  Batch = 0x6261746368ULL,
  Control = 0x6374726cULL,
};

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t counter() const { return counter_; }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace gbq
