#pragma once

#include <cstdint>

namespace linkedcox {

// 64-bit finalizer (murmur3 fmix64). Bijective, so distinct inputs keep
// distinct streams.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

// Derive a child stream key. Used as
//   derive(derive(derive(master, replication), subject), variable_tag)
// so every (replication, subject, variable) triple owns an independent stream
// regardless of evaluation order or thread scheduling.
constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t v) {
  return mix64(key ^ (v * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL));
}

// Draw tags, one per simulated variable.
enum class Var : std::uint64_t {
  X1 = 1,
  X2 = 2,
  X3 = 3,
  TFail = 4,
  C1 = 5,
  C2 = 6,
  Gap = 7,
  GapLen = 8,
  Link = 9,
  Rep = 100,   // replication-level sub-stream
  Boot = 101,  // resampling in tests
};

constexpr std::uint64_t derive(std::uint64_t key, Var v) {
  return derive(key, static_cast<std::uint64_t>(v));
}

double norm_quantile(double p);  // inverse standard normal CDF, AS 241 (PPND16)

// Counter-based generator: output k is mix64(key ^ f(k)) for an injective f,
// so streams are reproducible and cheap to fork.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() {
    return mix64(key_ ^ (++ctr_ * 0x9e3779b97f4a7c15ULL));
  }

  // uniform on [0,1) with 53 random bits
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0,1), never exactly 0 or 1; used where log or the normal
  // quantile must stay finite
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform() < p; }

  double exponential(double rate);        // inverse transform, rate > 0
  double normal(double mean, double sd);  // inverse transform via norm_quantile

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace linkedcox
