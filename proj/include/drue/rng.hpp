#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace drue {

// Stable 64-bit content hash, used for seed derivation and config hashes.
uint64_t fnv1a64(std::string_view s);

// Derives an independent stream seed from a base seed and a purpose tag, so
// generators for different samples/stages never share state.
uint64_t mix_seed(uint64_t base, std::string_view tag);
uint64_t mix_seed(uint64_t base, uint64_t salt);

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
  }
  double normal(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(eng_);
  }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(eng_);
  }
  bool bernoulli(double p) { return std::bernoulli_distribution(p)(eng_); }
  uint64_t next_u64() { return eng_(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), eng_);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace drue
