#include "drue/rng.hpp"

namespace drue {

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {
// splitmix64 finalizer
uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

uint64_t mix_seed(uint64_t base, std::string_view tag) { return mix64(base ^ fnv1a64(tag)); }

uint64_t mix_seed(uint64_t base, uint64_t salt) { return mix64(base ^ mix64(salt)); }

}  // namespace drue
