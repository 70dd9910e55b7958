#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace roml {

// SplitMix64 counter generator. Chosen over std::mt19937_64 +
// std::uniform_*_distribution because the standard distributions are not
// bit-identical across library implementations; experiments here must replay
// exactly from a seed on any platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1), 53-bit mantissa
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in {0, ..., n-1} via Lemire multiply-shift
  uint64_t next_below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::next_below: n must be positive");
    return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  // Independent substream derived from the original seed and a tag, so the
  // draw order of one consumer never shifts another's stream.
  Rng fork(uint64_t tag) const {
    uint64_t z = seed_ + 0x9e3779b97f4a7c15ull * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return Rng(z ^ (z >> 31));
  }

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  uint64_t state_;
};

// Samples an index from a probability vector. Assumes entries are nonnegative;
// falls back to the last positive entry if rounding leaves the scan short.
inline int sample_index(std::span<const double> probs, Rng& rng) {
  double u = rng.next_unit();
  double acc = 0.0;
  int last_positive = 0;
  for (int a = 0; a < static_cast<int>(probs.size()); ++a) {
    if (probs[a] > 0.0) last_positive = a;
    acc += probs[a];
    if (u < acc) return a;
  }
  return last_positive;
}

}  // namespace roml
