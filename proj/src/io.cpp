#include "residcorr/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "residcorr/errors.hpp"
#include "residcorr/logging.hpp"

namespace residcorr {

namespace {

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

double parse_real(const std::string& tok, const fs::path& path, std::size_t line) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw DataError(where(path, line) + "non-numeric token '" + tok + "'");
  }
  return v;
}

constexpr int kMissingCode = 0b01;

int decode_bed(unsigned code) {
  switch (code) {
    case 0b00: return 2;
    case 0b10: return 1;
    case 0b11: return 0;
    default: return kMissingGenotype;
  }
}

std::string write_failure(const fs::path& path) { return "failed writing " + path.string(); }

}  // namespace

PlinkPaths PlinkPaths::from_prefix(const fs::path& prefix_or_bed) {
  std::string prefix = prefix_or_bed.string();
  if (prefix_or_bed.extension() == ".bed") prefix.resize(prefix.size() - 4);
  return {prefix + ".bed", prefix + ".bim", prefix + ".fam"};
}

BedFileHeader BedFileHeader::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 3) throw DataError(".bed file is shorter than its 3-byte header");
  if (bytes[0] != 0x6C || bytes[1] != 0x1B) throw DataError(".bed file has a bad magic number");
  if (bytes[2] != 0x01) throw DataError(".bed file is not in SNP-major mode");
  return {{bytes[0], bytes[1], bytes[2]}};
}

std::vector<std::string> read_bim_ids(const fs::path& bim) {
  auto in = open_in(bim);
  std::vector<std::string> ids;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (blank(line)) continue;
    const auto f = split_ws(line);
    if (f.size() != 6) {
      throw DataError(where(bim, number) + "expected 6 fields, found " + std::to_string(f.size()));
    }
    ids.push_back(f[1]);
  }
  return ids;
}

std::vector<FamRecord> read_fam(const fs::path& fam) {
  auto in = open_in(fam);
  std::vector<FamRecord> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (blank(line)) continue;
    const auto f = split_ws(line);
    if (f.size() != 6) {
      throw DataError(where(fam, number) + "expected 6 fields, found " + std::to_string(f.size()));
    }
    out.push_back({f[0], f[1]});
  }
  return out;
}

BedSource::BedSource(const PlinkPaths& paths, MissingPolicy policy)
    : paths_(paths), policy_(policy) {
  snp_ids_ = read_bim_ids(paths.bim);
  samples_ = read_fam(paths.fam);
  m_ = snp_ids_.size();
  n_ = samples_.size();
  if (m_ == 0) throw DataError("no SNPs in " + paths.bim.string());
  if (n_ == 0) throw DataError("no individuals in " + paths.fam.string());
  bytes_per_snp_ = (n_ + 3) / 4;
  in_ = open_in(paths.bed, std::ios::binary);
  std::array<std::uint8_t, 3> header{};
  in_.read(reinterpret_cast<char*>(header.data()), 3);
  if (in_.gcount() != 3) throw DataError(".bed file is shorter than its 3-byte header");
  BedFileHeader::parse(header);
  const auto size = fs::file_size(paths.bed);
  const auto expected = 3 + static_cast<std::uintmax_t>(m_) * bytes_per_snp_;
  if (size != expected) {
    throw DataError(".bed size " + std::to_string(size) + " bytes does not match m = " +
                    std::to_string(m_) + ", n = " + std::to_string(n_) + " (expected " +
                    std::to_string(expected) + ")");
  }
  packed_.resize(bytes_per_snp_);
  rewind();
}

void BedSource::rewind() {
  in_.clear();
  in_.seekg(3);
  next_snp_ = 0;
  emitted_ = 0;
  dropped_ = 0;
  kept_.clear();
}

bool BedSource::next_block(GenotypeBlock& block, std::size_t max_rows) {
  block.first_snp = emitted_;
  block.rows = 0;
  block.data.clear();
  std::vector<std::uint8_t> row(n_);
  while (block.rows < max_rows && next_snp_ < m_) {
    in_.read(reinterpret_cast<char*>(packed_.data()), static_cast<std::streamsize>(bytes_per_snp_));
    if (static_cast<std::size_t>(in_.gcount()) != bytes_per_snp_) {
      throw DataError(".bed file ended early at SNP " + std::to_string(next_snp_ + 1));
    }
    const std::size_t snp = next_snp_++;
    bool missing = false;
    for (std::size_t i = 0; i < n_; ++i) {
      const unsigned code = (packed_[i / 4] >> (2 * (i % 4))) & 0b11u;
      if (code == kMissingCode) {
        if (policy_ == MissingPolicy::reject) {
          throw DataError("missing genotype at (snp " + std::to_string(snp + 1) + ", individual " +
                          std::to_string(i + 1) + ")");
        }
        missing = true;
        break;
      }
      row[i] = static_cast<std::uint8_t>(decode_bed(code));
    }
    if (missing) {
      ++dropped_;
      continue;
    }
    block.data.insert(block.data.end(), row.begin(), row.end());
    kept_.push_back(snp);
    ++block.rows;
  }
  emitted_ += block.rows;
  return block.rows > 0;
}

ValidatedGenotypes read_bed(const PlinkPaths& paths, MissingPolicy policy) {
  BedSource source(paths, policy);
  std::vector<std::uint8_t> data;
  GenotypeBlock block;
  while (source.next_block(block, kSnpBlockSize)) {
    data.insert(data.end(), block.data.begin(), block.data.end());
  }
  if (source.kept_snps().empty()) {
    throw DataError("no SNPs left after removing SNPs with missing genotypes");
  }
  std::vector<std::string> snp_ids;
  snp_ids.reserve(source.kept_snps().size());
  for (const std::size_t s : source.kept_snps()) snp_ids.push_back(source.snp_ids()[s]);
  std::vector<std::string> sample_ids;
  for (const auto& r : source.samples()) sample_ids.push_back(r.sample_id);
  const std::size_t kept = snp_ids.size();
  return {GenotypeMatrix(kept, source.num_individuals(), std::move(data), std::move(snp_ids),
                         std::move(sample_ids)),
          source.dropped_snps()};
}

std::vector<std::uint8_t> pack_bed_row(std::span<const int> genotypes) {
  std::vector<std::uint8_t> out((genotypes.size() + 3) / 4, 0);
  for (std::size_t i = 0; i < genotypes.size(); ++i) {
    unsigned code = 0;
    switch (genotypes[i]) {
      case 2: code = 0b00; break;
      case 1: code = 0b10; break;
      case 0: code = 0b11; break;
      case kMissingGenotype: code = kMissingCode; break;
      default:
        throw ContractError("cannot encode genotype " + std::to_string(genotypes[i]));
    }
    out[i / 4] = static_cast<std::uint8_t>(out[i / 4] | (code << (2 * (i % 4))));
  }
  return out;
}

BedWriter::BedWriter(const PlinkPaths& paths, const std::vector<std::string>& snp_ids,
                     const std::vector<std::string>& sample_ids,
                     const std::vector<std::string>& family_ids)
    : n_(sample_ids.size()), expected_rows_(snp_ids.size()) {
  if (n_ == 0 || expected_rows_ == 0) throw ContractError("BedWriter needs SNP and sample ids");
  if (!family_ids.empty() && family_ids.size() != n_) {
    throw ContractError("family ids must match the sample ids");
  }
  {
    auto bim = open_out(paths.bim);
    for (std::size_t s = 0; s < snp_ids.size(); ++s) {
      bim << "0\t" << snp_ids[s] << "\t0\t" << s + 1 << "\tA\tB\n";
    }
    if (!bim) throw DataError(write_failure(paths.bim));
  }
  {
    auto fam = open_out(paths.fam);
    for (std::size_t i = 0; i < n_; ++i) {
      fam << (family_ids.empty() ? sample_ids[i] : family_ids[i]) << '\t' << sample_ids[i]
          << "\t0\t0\t0\t-9\n";
    }
    if (!fam) throw DataError(write_failure(paths.fam));
  }
  out_ = open_out(paths.bed, std::ios::binary);
  const char header[3] = {0x6C, 0x1B, 0x01};
  out_.write(header, 3);
  packed_.resize((n_ + 3) / 4);
}

void BedWriter::write_row(std::span<const std::uint8_t> genotypes) {
  if (genotypes.size() != n_) throw ContractError("row length does not match the sample count");
  if (written_ >= expected_rows_) throw ContractError("more rows than SNP ids");
  std::fill(packed_.begin(), packed_.end(), 0);
  for (std::size_t i = 0; i < n_; ++i) {
    unsigned code = 0;
    switch (genotypes[i]) {
      case 2: code = 0b00; break;
      case 1: code = 0b10; break;
      case 0: code = 0b11; break;
      default: throw ContractError("cannot encode genotype " + std::to_string(genotypes[i]));
    }
    packed_[i / 4] = static_cast<std::uint8_t>(packed_[i / 4] | (code << (2 * (i % 4))));
  }
  out_.write(reinterpret_cast<const char*>(packed_.data()), static_cast<std::streamsize>(packed_.size()));
  ++written_;
}

void BedWriter::close() {
  if (written_ != expected_rows_) {
    throw ContractError("wrote " + std::to_string(written_) + " rows, expected " +
                        std::to_string(expected_rows_));
  }
  out_.close();
  if (!out_) throw DataError("failed writing .bed file");
}

void write_bed(const GenotypeMatrix& g, const PlinkPaths& paths,
               const std::vector<std::string>& family_ids) {
  std::vector<std::string> snp_ids = g.snp_ids();
  if (snp_ids.empty()) {
    for (std::size_t s = 0; s < g.num_snps(); ++s) snp_ids.push_back("snp" + std::to_string(s + 1));
  }
  std::vector<std::string> sample_ids = g.sample_ids();
  if (sample_ids.empty()) {
    for (std::size_t i = 0; i < g.num_individuals(); ++i) sample_ids.push_back("ind" + std::to_string(i + 1));
  }
  BedWriter writer(paths, snp_ids, sample_ids, family_ids);
  for (std::size_t s = 0; s < g.num_snps(); ++s) writer.write_row(g.row(s));
  writer.close();
}

Matrix read_whitespace_matrix(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (blank(line)) continue;
    std::vector<double> row;
    for (const auto& tok : split_ws(line)) row.push_back(parse_real(tok, path, number));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError(where(path, number) + "has " + std::to_string(row.size()) +
                      " entries, expected " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + " holds no rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

void write_whitespace_matrix(const Matrix& m, const fs::path& path) {
  auto out = open_out(path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ' ';
      out << format_number(m(r, c), 17);
    }
    out << '\n';
  }
  if (!out) throw DataError(write_failure(path));
}

Matrix read_q(const fs::path& path) {
  const Matrix m = read_whitespace_matrix(path);
  if (m.minCoeff() < 0.0 || m.maxCoeff() > 1.0) {
    warn(path.string() + ": admixture proportions outside [0, 1]");
  }
  const Vector sums = m.rowwise().sum();
  if ((sums.array() - 1.0).abs().maxCoeff() > 1e-3) {
    warn(path.string() + ": admixture proportions do not sum to one for every individual");
  }
  return m.transpose();
}

Matrix read_p(const fs::path& path) { return read_whitespace_matrix(path); }

RawGenotypes read_tsv_genotypes_raw(const fs::path& path) {
  auto in = open_in(path);
  RawGenotypes raw;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (raw.num_snps == 0) {
      raw.num_individuals = fields.size();
    } else if (fields.size() != raw.num_individuals) {
      throw DataError(where(path, number) + "has " + std::to_string(fields.size()) +
                      " genotypes, expected " + std::to_string(raw.num_individuals));
    }
    for (const auto& f : fields) {
      if (f == "NA") {
        raw.values.push_back(kMissingGenotype);
      } else if (f == "0" || f == "1" || f == "2") {
        raw.values.push_back(f[0] - '0');
      } else {
        throw DataError(where(path, number) + "invalid genotype '" + f + "'");
      }
    }
    ++raw.num_snps;
  }
  if (raw.num_snps == 0) throw DataError(path.string() + ": no SNPs");
  return raw;
}

ValidatedGenotypes read_tsv_genotypes(const fs::path& path, MissingPolicy policy) {
  return validate_genotypes(read_tsv_genotypes_raw(path), policy);
}

void write_tsv_genotypes(const GenotypeMatrix& g, const fs::path& path) {
  auto out = open_out(path);
  std::string line;
  for (std::size_t s = 0; s < g.num_snps(); ++s) {
    line.clear();
    for (const std::uint8_t v : g.row(s)) {
      if (!line.empty()) line += '\t';
      line += static_cast<char>('0' + v);
    }
    line += '\n';
    out << line;
  }
  if (!out) throw DataError(write_failure(path));
}

void write_matrix_tsv(const Matrix& m, const std::vector<std::string>& ids, const fs::path& path,
                      const BoolMatrix* mask) {
  if (m.rows() != m.cols() || ids.size() != static_cast<std::size_t>(m.rows())) {
    throw ContractError("write_matrix_tsv needs a square matrix with one id per row");
  }
  auto out = open_out(path);
  out << "id";
  for (const auto& id : ids) out << '\t' << id;
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << ids[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << '\t' << ((mask != nullptr && (*mask)(r, c)) ? std::string("NA") : format_number(m(r, c)));
    }
    out << '\n';
  }
  if (!out) throw DataError(write_failure(path));
}

LabeledMatrix read_matrix_tsv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t number = 0;
  LabeledMatrix out;
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<bool>> missing;
  while (std::getline(in, line)) {
    ++number;
    strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (number == 1) {
      if (fields.empty() || fields[0] != "id") throw DataError(where(path, 1) + "header must start with 'id'");
      out.columns.assign(fields.begin() + 1, fields.end());
      continue;
    }
    if (fields.size() != out.columns.size() + 1) {
      throw DataError(where(path, number) + "has " + std::to_string(fields.size() - 1) +
                      " values, expected " + std::to_string(out.columns.size()));
    }
    out.ids.push_back(fields[0]);
    std::vector<double> row;
    std::vector<bool> miss;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const bool na = fields[c] == "NA";
      miss.push_back(na);
      row.push_back(na ? std::nan("") : parse_real(fields[c], path, number));
    }
    rows.push_back(std::move(row));
    missing.push_back(std::move(miss));
  }
  if (number == 0) throw DataError(path.string() + " is empty");
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(out.columns.size());
  out.values.resize(r, c);
  out.missing.resize(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      out.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      out.missing(i, j) = missing[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return out;
}

std::vector<std::string> read_labels(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    const auto f = split_ws(line);
    if (f.empty()) continue;
    labels.push_back(f[0]);
  }
  if (labels.empty()) throw DataError(path.string() + " holds no labels");
  return labels;
}

void write_labels(const std::vector<std::string>& labels, const fs::path& path) {
  auto out = open_out(path);
  for (const auto& l : labels) out << l << '\n';
  if (!out) throw DataError(write_failure(path));
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  auto out = open_out(path);
  out << manifest.dump(2) << '\n';
  if (!out) throw DataError(write_failure(path));
}

Manifest read_manifest(const fs::path& path) {
  auto in = open_in(path);
  try {
    return Manifest::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_number(double value, int significant) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant, value);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

}  // namespace residcorr
