#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace residcorr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Biallelic allele counts, SNP-major: one contiguous row of n bytes per SNP.
class GenotypeMatrix {
 public:
  GenotypeMatrix(std::size_t num_snps, std::size_t num_individuals,
                 std::vector<std::uint8_t> data,
                 std::vector<std::string> snp_ids = {},
                 std::vector<std::string> sample_ids = {});

  std::size_t num_snps() const { return m_; }
  std::size_t num_individuals() const { return n_; }

  std::uint8_t operator()(std::size_t snp, std::size_t individual) const {
    return data_[snp * n_ + individual];
  }
  std::span<const std::uint8_t> row(std::size_t snp) const {
    return {data_.data() + snp * n_, n_};
  }
  /// Rows [first, first + count) as one contiguous span.
  std::span<const std::uint8_t> rows(std::size_t first, std::size_t count) const {
    return {data_.data() + first * n_, count * n_};
  }
  const std::vector<std::uint8_t>& data() const { return data_; }
  const std::vector<std::string>& snp_ids() const { return snp_ids_; }
  const std::vector<std::string>& sample_ids() const { return sample_ids_; }

  /// Copy holding only the listed SNP rows, in the given order.
  GenotypeMatrix select_snps(std::span<const std::size_t> kept) const;

  bool operator==(const GenotypeMatrix&) const = default;

 private:
  std::size_t m_;
  std::size_t n_;
  std::vector<std::uint8_t> data_;
  std::vector<std::string> snp_ids_;
  std::vector<std::string> sample_ids_;
};

enum class MissingPolicy { reject, drop_snp };

MissingPolicy parse_missing_policy(std::string_view text);
std::string_view to_string(MissingPolicy policy);

inline constexpr int kMissingGenotype = -1;

/// Genotypes before missingness resolution; entries in {0, 1, 2, kMissingGenotype}.
struct RawGenotypes {
  std::size_t num_snps = 0;
  std::size_t num_individuals = 0;
  std::vector<int> values;
  std::vector<std::string> snp_ids;
  std::vector<std::string> sample_ids;
};

struct ValidatedGenotypes {
  GenotypeMatrix genotypes;
  std::size_t dropped_snps = 0;
};

/// Resolves missing entries according to `policy`. Under reject the first
/// missing entry is reported 1-based as (snp, individual).
ValidatedGenotypes validate_genotypes(const RawGenotypes& raw, MissingPolicy policy);

/// Q is k x n admixture proportions, F is m x k ancestral frequencies, Pi = FQ.
class AdmixtureModel {
 public:
  AdmixtureModel(Matrix q, Matrix f);

  std::size_t k() const { return static_cast<std::size_t>(q_.rows()); }
  const Matrix& q() const { return q_; }
  const Matrix& f() const { return f_; }
  /// True when every column of Q sums to one (within 1e-8).
  bool proportions_sum_to_one() const { return sums_to_one_; }
  /// Pi restricted to the given SNP rows.
  Matrix pi_rows(std::size_t first, std::size_t count) const;

 private:
  Matrix q_;
  Matrix f_;
  bool sums_to_one_ = false;
};

enum class ProjectionMethod { pca1, pca2, pca3, pca_null, from_q, from_pi, exact };

std::string_view to_string(ProjectionMethod method);
ProjectionMethod parse_projection_method(std::string_view text);

/// Orthogonal projector of asserted rank k'.
class ProjectionMatrix {
 public:
  ProjectionMatrix(Matrix p, std::size_t k_prime, ProjectionMethod method);

  const Matrix& matrix() const { return p_; }
  std::size_t k_prime() const { return k_prime_; }
  ProjectionMethod method() const { return method_; }
  std::size_t size() const { return static_cast<std::size_t>(p_.rows()); }
  /// True when P e = e within the symmetry tolerance.
  bool contains_ones() const;

 private:
  Matrix p_;
  std::size_t k_prime_;
  ProjectionMethod method_;
};

/// Per-individual average heterozygosity, (1/m) sum_s G(2 - G).
class HeterozygosityDiag {
 public:
  explicit HeterozygosityDiag(Vector d);
  const Vector& values() const { return d_; }
  std::size_t size() const { return static_cast<std::size_t>(d_.size()); }

 private:
  Vector d_;
};

/// Eigenpairs in descending eigenvalue order; column j of the vectors pairs with value j.
class EigenDecomposition {
 public:
  EigenDecomposition(Vector eigenvalues, Matrix eigenvectors);

  /// Also checks that the pairs reconstruct `source` within tolerance.
  static EigenDecomposition checked(const Matrix& source, Vector eigenvalues,
                                    Matrix eigenvectors);

  const Vector& values() const { return values_; }
  const Matrix& vectors() const { return vectors_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

 private:
  Vector values_;
  Matrix vectors_;
};

/// Group membership of each individual, with blocks in display order.
class PopulationLabels {
 public:
  PopulationLabels(std::vector<std::size_t> assignment, std::vector<std::string> names);

  /// Blocks ordered by first appearance.
  static PopulationLabels from_names(std::span<const std::string> per_individual);
  /// Consecutive blocks of the given sizes, named pop1, pop2, ...
  static PopulationLabels from_sizes(std::span<const std::size_t> sizes,
                                     std::vector<std::string> names = {});
  /// Everyone in one block.
  static PopulationLabels single(std::size_t n, std::string name = "all");

  std::size_t size() const { return assignment_.size(); }
  std::size_t num_blocks() const { return names_.size(); }
  std::size_t block_of(std::size_t individual) const { return assignment_[individual]; }
  const std::vector<std::size_t>& assignment() const { return assignment_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::size_t>& block_sizes() const { return sizes_; }
  /// Indices of the members of a block, in input order.
  std::vector<std::size_t> members(std::size_t block) const;
  std::vector<std::string> per_individual() const;

 private:
  std::vector<std::size_t> assignment_;
  std::vector<std::string> names_;
  std::vector<std::size_t> sizes_;
};

/// Empirical vs estimated residual correlations and their difference.
class CorrelationReport {
 public:
  CorrelationReport(Matrix b_hat, Matrix c_hat, BoolMatrix undefined_mask,
                    PopulationLabels labels);

  const Matrix& b_hat() const { return b_hat_; }
  const Matrix& c_hat() const { return c_hat_; }
  const Matrix& diff() const { return diff_; }
  const BoolMatrix& undefined_mask() const { return mask_; }
  const PopulationLabels& labels() const { return labels_; }
  std::size_t size() const { return static_cast<std::size_t>(b_hat_.rows()); }

 private:
  Matrix b_hat_;
  Matrix c_hat_;
  Matrix diff_;
  BoolMatrix mask_;
  PopulationLabels labels_;
};

/// Population-level quantities behind the large-m limits.
class LimitSpec {
 public:
  LimitSpec(Matrix q, Vector mu, Matrix sigma, Vector d);

  /// D from the prior: D_ii = 2 (mu'q_i - (mu'q_i)^2 - (Q' Sigma Q)_ii).
  static LimitSpec from_prior(Matrix q, Vector mu, Matrix sigma);

  const Matrix& q() const { return q_; }
  const Vector& mu() const { return mu_; }
  const Matrix& sigma() const { return sigma_; }
  const Vector& d() const { return d_; }

 private:
  Matrix q_;
  Vector mu_;
  Matrix sigma_;
  Vector d_;
};

double max_asymmetry(const Matrix& a);

}  // namespace residcorr
