#pragma once

#include <cstddef>

namespace residcorr {

/// Numerical tolerances shared by every module.
struct Tolerances {
  static constexpr double symmetry = 1e-8;
  static constexpr double idempotency = 1e-8;
  static constexpr double trace = 1e-6;
  static constexpr double orthonormality = 1e-8;
  static constexpr double reconstruction = 1e-8;
  static constexpr double gram_schmidt = 1e-10;
  static constexpr double variance_floor = 1e-12;
  static constexpr double correlation_range = 1e-9;
  static constexpr double psd = 1e-10;
  static constexpr double gram_symmetry = 1e-10;
  // Eigenvalue-gap warning threshold, relative to the largest eigenvalue.
  static constexpr double eigen_gap = 1e-6;
};

/// SNP rows per streaming block. Partial sums always combine in block order.
inline constexpr std::size_t kSnpBlockSize = 8192;

inline constexpr const char* kFormatVersion = "1";

}  // namespace residcorr
