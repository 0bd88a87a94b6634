#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "residcorr/core.hpp"
#include "residcorr/stream.hpp"

namespace residcorr {

namespace fs = std::filesystem;

/// Paths of a .bed/.bim/.fam triple sharing one prefix.
struct PlinkPaths {
  fs::path bed;
  fs::path bim;
  fs::path fam;
  /// Accepts "prefix" or "prefix.bed".
  static PlinkPaths from_prefix(const fs::path& prefix_or_bed);
};

struct BedFileHeader {
  std::array<std::uint8_t, 3> bytes{0x6C, 0x1B, 0x01};
  /// Throws DataError unless the magic is 0x6C 0x1B and the mode is SNP-major.
  static BedFileHeader parse(std::span<const std::uint8_t> bytes);
};

struct FamRecord {
  std::string family_id;
  std::string sample_id;
};

std::vector<std::string> read_bim_ids(const fs::path& bim);
std::vector<FamRecord> read_fam(const fs::path& fam);

/// Streams SNP-major .bed rows block by block, decoding 00->2, 10->1, 11->0
/// (A1 allele count) and resolving 01 (missing) by policy.
class BedSource final : public GenotypeSource {
 public:
  BedSource(const PlinkPaths& paths, MissingPolicy policy);

  std::size_t num_individuals() const override { return n_; }
  std::size_t num_snps_in_file() const { return m_; }
  const std::vector<std::string>& snp_ids() const { return snp_ids_; }
  const std::vector<FamRecord>& samples() const { return samples_; }
  /// SNPs dropped during the most recent pass (drop_snp policy).
  std::size_t dropped_snps() const { return dropped_; }
  /// File index of every row emitted so far in the current pass.
  const std::vector<std::size_t>& kept_snps() const { return kept_; }

  void rewind() override;
  bool next_block(GenotypeBlock& block, std::size_t max_rows) override;

 private:
  PlinkPaths paths_;
  MissingPolicy policy_;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::size_t bytes_per_snp_ = 0;
  std::vector<std::string> snp_ids_;
  std::vector<FamRecord> samples_;
  std::ifstream in_;
  std::size_t next_snp_ = 0;
  std::size_t emitted_ = 0;
  std::size_t dropped_ = 0;
  std::vector<std::uint8_t> packed_;
  std::vector<std::size_t> kept_;
};

/// Loads the whole file; the dropped count is reported alongside.
ValidatedGenotypes read_bed(const PlinkPaths& paths, MissingPolicy policy);

/// Incremental .bed writer; the .bim/.fam files are written on construction.
/// Family ids default to the sample ids.
class BedWriter {
 public:
  BedWriter(const PlinkPaths& paths, const std::vector<std::string>& snp_ids,
            const std::vector<std::string>& sample_ids,
            const std::vector<std::string>& family_ids = {});
  void write_row(std::span<const std::uint8_t> genotypes);
  void close();

 private:
  std::ofstream out_;
  std::size_t n_;
  std::size_t expected_rows_;
  std::size_t written_ = 0;
  std::vector<std::uint8_t> packed_;
};

void write_bed(const GenotypeMatrix& g, const PlinkPaths& paths,
               const std::vector<std::string>& family_ids = {});

/// Encodes one SNP row of genotypes in {0, 1, 2, kMissingGenotype} to packed bytes.
std::vector<std::uint8_t> pack_bed_row(std::span<const int> genotypes);

/// ADMIXTURE .Q: n rows of k' proportions, returned transposed (k' x n).
/// Out-of-range entries or row sums away from one only warn.
Matrix read_q(const fs::path& path);
/// ADMIXTURE .P: m rows of k' frequencies (m x k').
Matrix read_p(const fs::path& path);
/// Whitespace-separated real matrix; errors name the line.
Matrix read_whitespace_matrix(const fs::path& path);
void write_whitespace_matrix(const Matrix& m, const fs::path& path);

/// Tab-separated integer genotypes, one SNP per line; "NA" marks missing.
RawGenotypes read_tsv_genotypes_raw(const fs::path& path);
ValidatedGenotypes read_tsv_genotypes(const fs::path& path, MissingPolicy policy);
void write_tsv_genotypes(const GenotypeMatrix& g, const fs::path& path);

/// Headered TSV: first row "id" then column ids; each row starts with its id.
/// Entries flagged in `mask` are written as NA.
void write_matrix_tsv(const Matrix& m, const std::vector<std::string>& ids, const fs::path& path,
                      const BoolMatrix* mask = nullptr);
struct LabeledMatrix {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  Matrix values;
  BoolMatrix missing;
};
LabeledMatrix read_matrix_tsv(const fs::path& path);

std::vector<std::string> read_labels(const fs::path& path);
void write_labels(const std::vector<std::string>& labels, const fs::path& path);

/// Run manifest: a single JSON object written with sorted keys and no timestamps.
using Manifest = nlohmann::json;
void write_manifest(const Manifest& manifest, const fs::path& path);
Manifest read_manifest(const fs::path& path);

/// Fixed 6-significant-digit formatting shared by text outputs.
std::string format_number(double value, int significant = 6);

}  // namespace residcorr
