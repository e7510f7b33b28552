#pragma once

#include <cmath>
#include <cstdint>

namespace ssllab {

// Counter-free deterministic RNG. SplitMix64 core with hand-rolled value
// conversions so that draws are bit-stable across standard libraries and
// platforms (std::uniform_real_distribution et al. are implementation
// defined). Streams for distinct (seed, purpose, a, b) keys are derived by
// avalanche mixing and are statistically independent in practice.
class RngStream {
 public:
  explicit RngStream(uint64_t state) : state_(state) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 24 bits of mantissa.
  float uniform() { return float(next_u64() >> 40) * 0x1.0p-24f; }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0.
  int uniform_int(int n) {
    return int((next_u64() >> 11) % uint64_t(n));
  }

  bool bernoulli(float p) { return uniform() < p; }

  // Standard normal via Box-Muller (second value cached).
  float normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    float u1 = uniform();
    float u2 = uniform();
    if (u1 < 1e-12f) u1 = 1e-12f;
    const float r = std::sqrt(-2.0f * std::log(u1));
    const float theta = 6.28318530717958647692f * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  float normal(float sigma) { return sigma * normal(); }

 private:
  uint64_t state_;
  float cached_ = 0.0f;
  bool has_cached_ = false;
};

namespace detail {
inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDull;
  z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ull;
  return z ^ (z >> 33);
}
}  // namespace detail

// Stream purposes keep independent uses of one run seed decoupled.
enum class StreamPurpose : uint64_t {
  augment = 1,
  data_train = 2,
  data_test = 3,
  model_init = 4,
  batch_order = 5,
  label_subset = 6,
  grid = 7,
};

// Derives a reproducible stream for (seed, purpose, a, b). Streams for
// distinct keys are independent; the same key always yields the same draws.
inline RngStream derive_stream(uint64_t seed, StreamPurpose purpose,
                               uint64_t a = 0, uint64_t b = 0) {
  uint64_t s = detail::mix64(seed ^ 0x6A09E667F3BCC909ull);
  s = detail::mix64(s ^ (uint64_t(purpose) * 0xBB67AE8584CAA73Bull));
  s = detail::mix64(s ^ (a * 0x3C6EF372FE94F82Bull));
  s = detail::mix64(s ^ (b * 0xA54FF53A5F1D36F1ull));
  return RngStream(s);
}

// Spec surface for augmentation streams: (seed, sample_index, epoch).
inline RngStream derive_stream(uint64_t seed, uint64_t sample_index,
                               int epoch) {
  return derive_stream(seed, StreamPurpose::augment, sample_index,
                       uint64_t(epoch));
}

}  // namespace ssllab
