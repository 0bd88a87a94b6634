#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace residcorr {

/// Philox4x32-10 counter-based generator. The key is the user seed and the
/// upper half of the 128-bit counter is a stream id (one stream per SNP), so
/// every SNP draws from its own independent sequence regardless of which
/// thread generates it.
class CounterRng {
 public:
  using result_type = std::uint32_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (index_ == 4) refill();
    return buffer_[index_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)() >> 5;  // 27 bits
    const std::uint64_t lo = (*this)() >> 6;  // 26 bits
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
  }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> buffer_{};
  int index_ = 4;
};

/// Raw Philox4x32-10 block function (exposed for known-answer tests).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                          std::array<std::uint32_t, 2> key);

/// log of a Gamma(shape, 1) draw; stays finite for very small shapes.
double sample_log_gamma(double shape, CounterRng& rng);
/// Beta(a, b) draw computed from log-gamma variates.
double sample_beta(double a, double b, CounterRng& rng);
/// Binomial(2, p) by inversion of a single uniform.
int sample_binomial2(double p, CounterRng& rng);
inline int sample_bernoulli(double p, CounterRng& rng) { return rng.uniform() < p ? 1 : 0; }

}  // namespace residcorr
