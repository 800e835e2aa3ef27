#pragma once

#include <cstdint>
#include <vector>

namespace rgan {

// xoshiro256++ with splitmix64 seeding. We keep our own generator instead
// of <random> because the distributions there are not bit-reproducible
// across standard library implementations, and every data/training
// operation in this project carries a bit-exact determinism contract.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  // Uniform double in [0, 1).
  double uniform();
  // Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  // Unbiased integer in [0, n). n must be > 0.
  uint64_t uniform_int(uint64_t n);
  // Standard normal via Box-Muller (second value cached).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent stream; used for per-purpose sub-generators so
  // diagnostics never consume the training stream.
  Rng split(uint64_t stream_id) const;

  // Raw state for checkpointing. Restoring these restores the exact stream.
  struct State {
    uint64_t s[4];
    bool has_spare;
    double spare;
  };
  State state() const;
  void set_state(const State& st);

 private:
  uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rgan
