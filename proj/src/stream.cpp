#include "residcorr/stream.hpp"

#include <algorithm>

namespace residcorr {

bool MatrixSource::next_block(GenotypeBlock& block, std::size_t max_rows) {
  const std::size_t m = g_.num_snps();
  if (next_ >= m) return false;
  const std::size_t rows = std::min(max_rows, m - next_);
  const auto span = g_.rows(next_, rows);
  block.first_snp = next_;
  block.rows = rows;
  block.data.assign(span.begin(), span.end());
  next_ += rows;
  return true;
}

Matrix block_to_matrix(const GenotypeBlock& block, std::size_t n) {
  Matrix x(static_cast<Eigen::Index>(block.rows), static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < block.rows; ++s) {
    const std::uint8_t* row = block.data.data() + s * n;
    for (std::size_t i = 0; i < n; ++i) {
      x(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = row[i];
    }
  }
  return x;
}

}  // namespace residcorr
