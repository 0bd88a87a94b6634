#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "residcorr/core.hpp"

namespace testutil {

using residcorr::GenotypeMatrix;
using residcorr::Matrix;
using residcorr::Vector;

inline GenotypeMatrix random_genotypes(std::size_t m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 2);
  std::vector<std::uint8_t> data(m * n);
  for (auto& v : data) v = static_cast<std::uint8_t>(pick(rng));
  return GenotypeMatrix(m, n, std::move(data));
}

inline GenotypeMatrix genotypes(std::size_t m, std::size_t n, std::vector<int> values) {
  std::vector<std::uint8_t> data(values.begin(), values.end());
  return GenotypeMatrix(m, n, std::move(data));
}

inline Matrix as_matrix(const GenotypeMatrix& g) {
  Matrix out(g.num_snps(), g.num_individuals());
  for (std::size_t s = 0; s < g.num_snps(); ++s) {
    for (std::size_t i = 0; i < g.num_individuals(); ++i) out(s, i) = g(s, i);
  }
  return out;
}

/// Q'(QQ')^-1 Q by a direct solve.
inline Matrix exact_projector(const Matrix& q) {
  const Matrix qqt = q * q.transpose();
  return q.transpose() * qqt.ldlt().solve(q);
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = u(rng);
  }
  return a;
}

inline Matrix random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
  const Matrix a = random_matrix(n, n, rng);
  return 0.5 * (a + a.transpose());
}

inline Matrix random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  return Eigen::HouseholderQR<Matrix>(random_matrix(n, n, rng)).householderQ() * Matrix::Identity(n, n);
}

/// Mean and sd (divisor count - 1) of the off-diagonal entries inside [first, first + size).
struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

inline MeanSd within_block(const Matrix& a, std::size_t first, std::size_t size) {
  double sum = 0.0;
  double sq = 0.0;
  double count = 0.0;
  for (std::size_t i = first; i < first + size; ++i) {
    for (std::size_t j = i + 1; j < first + size; ++j) {
      sum += a(i, j);
      sq += a(i, j) * a(i, j);
      count += 1.0;
    }
  }
  const double mean = sum / count;
  return {mean, std::sqrt(std::max(0.0, (sq - count * mean * mean) / (count - 1.0)))};
}

}  // namespace testutil
