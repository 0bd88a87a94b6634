#include "residcorr/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace residcorr {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

void CounterRng::refill() {
  buffer_ = philox4x32_10(counter_, key_);
  if (++counter_[0] == 0) ++counter_[1];
  index_ = 0;
}

double sample_log_gamma(double shape, CounterRng& rng) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> gamma(shape, 1.0);
    return std::log(gamma(rng));
  }
  // Ga(a) = Ga(a + 1) U^(1/a), kept on the log scale for tiny a.
  std::gamma_distribution<double> gamma(shape + 1.0, 1.0);
  const double u = 1.0 - rng.uniform();
  return std::log(gamma(rng)) + std::log(u) / shape;
}

double sample_beta(double a, double b, CounterRng& rng) {
  const double x = sample_log_gamma(a, rng);
  const double y = sample_log_gamma(b, rng);
  const double top = std::max(x, y);
  const double ex = std::exp(x - top);
  const double ey = std::exp(y - top);
  return ex / (ex + ey);
}

int sample_binomial2(double p, CounterRng& rng) {
  const double q = 1.0 - p;
  const double u = rng.uniform();
  const double p0 = q * q;
  if (u < p0) return 0;
  if (u < p0 + 2.0 * p * q) return 1;
  return 2;
}

}  // namespace residcorr
