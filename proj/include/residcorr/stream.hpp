#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "residcorr/config.hpp"
#include "residcorr/core.hpp"
#include "residcorr/parallel.hpp"

namespace residcorr {

/// A run of consecutive SNP rows, SNP-major, n bytes per row.
struct GenotypeBlock {
  std::size_t first_snp = 0;
  std::size_t rows = 0;
  std::vector<std::uint8_t> data;
};

/// Sequential producer of complete (missing-free) SNP rows. Consumers may make
/// several passes by calling rewind().
class GenotypeSource {
 public:
  virtual ~GenotypeSource() = default;
  virtual std::size_t num_individuals() const = 0;
  virtual void rewind() = 0;
  /// Fills `block` with up to max_rows rows; returns false once exhausted.
  virtual bool next_block(GenotypeBlock& block, std::size_t max_rows) = 0;
};

class MatrixSource final : public GenotypeSource {
 public:
  explicit MatrixSource(const GenotypeMatrix& genotypes) : g_(genotypes) {}
  std::size_t num_individuals() const override { return g_.num_individuals(); }
  void rewind() override { next_ = 0; }
  bool next_block(GenotypeBlock& block, std::size_t max_rows) override;

 private:
  const GenotypeMatrix& g_;
  std::size_t next_ = 0;
};

/// One full pass over `source` from the start: blocks of kSnpBlockSize rows are
/// read sequentially, turned into partials by make(block) in parallel, and
/// folded in block order. Returns the number of SNP rows seen.
template <class Partial, class Make, class Fold>
std::size_t stream_reduce(GenotypeSource& source, Make&& make, Fold&& fold) {
  source.rewind();
  const std::size_t wave = std::max<std::size_t>(1, 2 * num_threads());
  std::vector<GenotypeBlock> blocks(wave);
  std::vector<std::optional<Partial>> slots(wave);
  std::size_t total = 0;
  bool more = true;
  while (more) {
    std::size_t count = 0;
    while (count < wave) {
      if (!source.next_block(blocks[count], kSnpBlockSize)) {
        more = false;
        break;
      }
      total += blocks[count].rows;
      ++count;
    }
    parallel_for(count, [&](std::size_t j) { slots[j].emplace(make(blocks[j])); });
    for (std::size_t j = 0; j < count; ++j) {
      fold(std::move(*slots[j]));
      slots[j].reset();
    }
  }
  return total;
}

/// Converts a block to an rows x n double matrix.
Matrix block_to_matrix(const GenotypeBlock& block, std::size_t n);

}  // namespace residcorr
