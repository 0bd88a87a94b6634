#include "residcorr/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "residcorr/config.hpp"
#include "residcorr/errors.hpp"
#include "residcorr/spectral.hpp"

namespace residcorr {

namespace {

std::string dims(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace

double max_asymmetry(const Matrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  return (a - a.transpose()).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------- genotypes

GenotypeMatrix::GenotypeMatrix(std::size_t num_snps, std::size_t num_individuals,
                               std::vector<std::uint8_t> data,
                               std::vector<std::string> snp_ids,
                               std::vector<std::string> sample_ids)
    : m_(num_snps),
      n_(num_individuals),
      data_(std::move(data)),
      snp_ids_(std::move(snp_ids)),
      sample_ids_(std::move(sample_ids)) {
  if (m_ < 1 || n_ < 1) {
    throw ContractError("genotype matrix must have m >= 1 and n >= 1, got " + dims(m_, n_));
  }
  if (data_.size() != m_ * n_) {
    throw ContractError("genotype data holds " + std::to_string(data_.size()) +
                        " entries, expected " + std::to_string(m_ * n_));
  }
  if (!snp_ids_.empty() && snp_ids_.size() != m_) {
    throw ContractError("snp_ids has " + std::to_string(snp_ids_.size()) + " labels, expected " +
                        std::to_string(m_));
  }
  if (!sample_ids_.empty() && sample_ids_.size() != n_) {
    throw ContractError("sample_ids has " + std::to_string(sample_ids_.size()) +
                        " labels, expected " + std::to_string(n_));
  }
  const auto bad = std::find_if(data_.begin(), data_.end(), [](std::uint8_t v) { return v > 2; });
  if (bad != data_.end()) {
    const auto pos = static_cast<std::size_t>(bad - data_.begin());
    throw ContractError("genotype " + std::to_string(*bad) + " at (snp " +
                        std::to_string(pos / n_ + 1) + ", individual " +
                        std::to_string(pos % n_ + 1) + ") is not in {0,1,2}");
  }
}

GenotypeMatrix GenotypeMatrix::select_snps(std::span<const std::size_t> kept) const {
  std::vector<std::uint8_t> out;
  out.reserve(kept.size() * n_);
  std::vector<std::string> ids;
  for (std::size_t s : kept) {
    if (s >= m_) throw ContractError("SNP index " + std::to_string(s) + " out of range");
    const auto r = row(s);
    out.insert(out.end(), r.begin(), r.end());
    if (!snp_ids_.empty()) ids.push_back(snp_ids_[s]);
  }
  return GenotypeMatrix(kept.size(), n_, std::move(out), std::move(ids), sample_ids_);
}

MissingPolicy parse_missing_policy(std::string_view text) {
  if (text == "reject") return MissingPolicy::reject;
  if (text == "drop_snp" || text == "drop-snp") return MissingPolicy::drop_snp;
  throw ContractError("unknown missing-genotype policy '" + std::string(text) + "'");
}

std::string_view to_string(MissingPolicy policy) {
  return policy == MissingPolicy::reject ? "reject" : "drop_snp";
}

ValidatedGenotypes validate_genotypes(const RawGenotypes& raw, MissingPolicy policy) {
  const std::size_t m = raw.num_snps;
  const std::size_t n = raw.num_individuals;
  if (raw.values.size() != m * n) {
    throw ContractError("raw genotype matrix holds " + std::to_string(raw.values.size()) +
                        " entries, expected " + dims(m, n));
  }
  std::vector<std::uint8_t> data;
  data.reserve(m * n);
  std::vector<std::string> ids;
  std::size_t dropped = 0;
  for (std::size_t s = 0; s < m; ++s) {
    bool missing = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int v = raw.values[s * n + i];
      if (v == kMissingGenotype) {
        if (policy == MissingPolicy::reject) {
          throw DataError("missing genotype at (snp " + std::to_string(s + 1) + ", individual " +
                          std::to_string(i + 1) + ")");
        }
        missing = true;
        break;
      }
      if (v < 0 || v > 2) {
        throw DataError("genotype " + std::to_string(v) + " at (snp " + std::to_string(s + 1) +
                        ", individual " + std::to_string(i + 1) + ") is not in {0,1,2}");
      }
    }
    if (missing) {
      ++dropped;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) data.push_back(static_cast<std::uint8_t>(raw.values[s * n + i]));
    if (!raw.snp_ids.empty()) ids.push_back(raw.snp_ids[s]);
  }
  if (data.empty()) throw DataError("no SNPs left after removing SNPs with missing genotypes");
  const std::size_t kept = data.size() / n;
  return {GenotypeMatrix(kept, n, std::move(data), std::move(ids), raw.sample_ids), dropped};
}

// ---------------------------------------------------------------- admixture model

AdmixtureModel::AdmixtureModel(Matrix q, Matrix f) : q_(std::move(q)), f_(std::move(f)) {
  const auto k = q_.rows();
  if (k < 1 || q_.cols() < 1) throw ContractError("Q must be non-empty");
  if (f_.cols() != k) {
    throw ContractError("F has " + std::to_string(f_.cols()) + " columns but Q has " +
                        std::to_string(k) + " rows");
  }
  if (f_.rows() < 1) throw ContractError("F must have at least one SNP row");
  if (f_.minCoeff() < 0.0 || f_.maxCoeff() > 1.0) {
    throw ContractError("ancestral frequencies F must lie in [0,1]");
  }
  const auto q_rank = gram_schmidt_pivoted(q_).rank();
  if (q_rank != static_cast<std::size_t>(k)) {
    throw ContractError("Q has numerical rank " + std::to_string(q_rank) + ", expected " +
                        std::to_string(k));
  }
  const auto f_rank = gram_schmidt_pivoted(f_.transpose()).rank();
  if (f_rank != static_cast<std::size_t>(k)) {
    throw ContractError("F has numerical rank " + std::to_string(f_rank) + ", expected " +
                        std::to_string(k));
  }
  const Vector col_sums = q_.colwise().sum().transpose();
  sums_to_one_ = (col_sums.array() - 1.0).abs().maxCoeff() <= 1e-8;

  // Pi = FQ lies in [0,1] automatically when Q is a sub-convex combination.
  const bool convex = q_.minCoeff() >= 0.0 && col_sums.maxCoeff() <= 1.0 + 1e-12;
  if (!convex) {
    for (Eigen::Index s = 0; s < f_.rows(); ++s) {
      const Eigen::RowVectorXd pi = f_.row(s) * q_;
      if (pi.minCoeff() < -1e-12 || pi.maxCoeff() > 1.0 + 1e-12) {
        throw ContractError("Pi = FQ leaves [0,1] at SNP " + std::to_string(s + 1));
      }
    }
  }
}

Matrix AdmixtureModel::pi_rows(std::size_t first, std::size_t count) const {
  return f_.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count)) * q_;
}

// ---------------------------------------------------------------- projections

std::string_view to_string(ProjectionMethod method) {
  switch (method) {
    case ProjectionMethod::pca1: return "pca1";
    case ProjectionMethod::pca2: return "pca2";
    case ProjectionMethod::pca3: return "pca3";
    case ProjectionMethod::pca_null: return "pca-null";
    case ProjectionMethod::from_q: return "from_q";
    case ProjectionMethod::from_pi: return "from_pi";
    case ProjectionMethod::exact: return "exact";
  }
  return "unknown";
}

ProjectionMethod parse_projection_method(std::string_view text) {
  for (auto m : {ProjectionMethod::pca1, ProjectionMethod::pca2, ProjectionMethod::pca3,
                 ProjectionMethod::pca_null, ProjectionMethod::from_q, ProjectionMethod::from_pi,
                 ProjectionMethod::exact}) {
    if (to_string(m) == text) return m;
  }
  if (text == "pca_null") return ProjectionMethod::pca_null;
  throw ContractError("unknown projection method '" + std::string(text) + "'");
}

ProjectionMatrix::ProjectionMatrix(Matrix p, std::size_t k_prime, ProjectionMethod method)
    : p_(std::move(p)), k_prime_(k_prime), method_(method) {
  if (p_.rows() != p_.cols() || p_.rows() < 1) {
    throw ContractError("projection must be a non-empty square matrix, got " +
                        dims(p_.rows(), p_.cols()));
  }
  if (!p_.allFinite()) throw ContractError("projection has non-finite entries");
  const double asym = max_asymmetry(p_);
  if (asym > Tolerances::symmetry) {
    throw ContractError("projection is not symmetric (max |P - P'| = " + std::to_string(asym) + ")");
  }
  const double idem = (p_ * p_ - p_).cwiseAbs().maxCoeff();
  if (idem > Tolerances::idempotency) {
    throw ContractError("projection is not idempotent (max |P^2 - P| = " + std::to_string(idem) + ")");
  }
  const double tr = p_.trace();
  if (std::abs(tr - static_cast<double>(k_prime_)) > Tolerances::trace) {
    throw ContractError("projection trace " + std::to_string(tr) + " does not match rank " +
                        std::to_string(k_prime_));
  }
}

bool ProjectionMatrix::contains_ones() const {
  const Vector e = Vector::Ones(p_.rows());
  return (p_ * e - e).cwiseAbs().maxCoeff() <= Tolerances::symmetry;
}

// ---------------------------------------------------------------- small value types

HeterozygosityDiag::HeterozygosityDiag(Vector d) : d_(std::move(d)) {
  if (d_.size() < 1) throw ContractError("heterozygosity vector is empty");
  if (!d_.allFinite() || d_.minCoeff() < 0.0 || d_.maxCoeff() > 1.0) {
    throw ContractError("average heterozygosities must lie in [0,1]");
  }
}

EigenDecomposition::EigenDecomposition(Vector eigenvalues, Matrix eigenvectors)
    : values_(std::move(eigenvalues)), vectors_(std::move(eigenvectors)) {
  const auto n = values_.size();
  if (n < 1 || vectors_.rows() != n || vectors_.cols() != n) {
    throw ContractError("eigendecomposition needs n values and an n x n vector matrix");
  }
  for (Eigen::Index j = 1; j < n; ++j) {
    if (values_(j) > values_(j - 1)) throw ContractError("eigenvalues must be sorted descending");
  }
  const double ortho =
      (vectors_.transpose() * vectors_ - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(ortho <= Tolerances::orthonormality)) {
    throw ContractError("eigenvectors are not orthonormal (max |V'V - I| = " +
                        std::to_string(ortho) + ")");
  }
}

EigenDecomposition EigenDecomposition::checked(const Matrix& source, Vector eigenvalues,
                                               Matrix eigenvectors) {
  EigenDecomposition eig(std::move(eigenvalues), std::move(eigenvectors));
  if (source.rows() != static_cast<Eigen::Index>(eig.size()) || source.cols() != source.rows()) {
    throw ContractError("eigendecomposition size does not match its source matrix");
  }
  const Matrix rebuilt = eig.vectors_ * eig.values_.asDiagonal() * eig.vectors_.transpose();
  const double err = (source - rebuilt).norm();
  if (!(err <= Tolerances::reconstruction * std::max(1.0, source.norm()))) {
    throw ContractError("eigendecomposition does not reconstruct its source (error " +
                        std::to_string(err) + ")");
  }
  return eig;
}

// ---------------------------------------------------------------- labels

PopulationLabels::PopulationLabels(std::vector<std::size_t> assignment,
                                   std::vector<std::string> names)
    : assignment_(std::move(assignment)), names_(std::move(names)), sizes_(names_.size(), 0) {
  if (assignment_.empty()) throw ContractError("labels must cover at least one individual");
  for (std::size_t a : assignment_) {
    if (a >= names_.size()) throw ContractError("label index out of range");
    ++sizes_[a];
  }
  for (std::size_t b = 0; b < sizes_.size(); ++b) {
    if (sizes_[b] == 0) throw ContractError("population block '" + names_[b] + "' is empty");
  }
}

PopulationLabels PopulationLabels::from_names(std::span<const std::string> per_individual) {
  std::vector<std::string> names;
  std::vector<std::size_t> assignment;
  assignment.reserve(per_individual.size());
  for (const auto& label : per_individual) {
    auto it = std::find(names.begin(), names.end(), label);
    if (it == names.end()) {
      names.push_back(label);
      assignment.push_back(names.size() - 1);
    } else {
      assignment.push_back(static_cast<std::size_t>(it - names.begin()));
    }
  }
  return PopulationLabels(std::move(assignment), std::move(names));
}

PopulationLabels PopulationLabels::from_sizes(std::span<const std::size_t> sizes,
                                              std::vector<std::string> names) {
  if (names.empty()) {
    for (std::size_t b = 0; b < sizes.size(); ++b) names.push_back("pop" + std::to_string(b + 1));
  }
  if (names.size() != sizes.size()) throw ContractError("one name per block size is required");
  std::vector<std::size_t> assignment;
  for (std::size_t b = 0; b < sizes.size(); ++b) assignment.insert(assignment.end(), sizes[b], b);
  return PopulationLabels(std::move(assignment), std::move(names));
}

PopulationLabels PopulationLabels::single(std::size_t n, std::string name) {
  return PopulationLabels(std::vector<std::size_t>(n, 0), {std::move(name)});
}

std::vector<std::size_t> PopulationLabels::members(std::size_t block) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment_.size(); ++i) {
    if (assignment_[i] == block) out.push_back(i);
  }
  return out;
}

std::vector<std::string> PopulationLabels::per_individual() const {
  std::vector<std::string> out;
  out.reserve(assignment_.size());
  for (std::size_t a : assignment_) out.push_back(names_[a]);
  return out;
}

// ---------------------------------------------------------------- correlation report

CorrelationReport::CorrelationReport(Matrix b_hat, Matrix c_hat, BoolMatrix undefined_mask,
                                     PopulationLabels labels)
    : b_hat_(std::move(b_hat)),
      c_hat_(std::move(c_hat)),
      mask_(std::move(undefined_mask)),
      labels_(std::move(labels)) {
  const auto n = b_hat_.rows();
  if (b_hat_.cols() != n || c_hat_.rows() != n || c_hat_.cols() != n || mask_.rows() != n ||
      mask_.cols() != n) {
    throw ContractError("correlation report matrices must all be n x n");
  }
  if (labels_.size() != static_cast<std::size_t>(n)) {
    throw ContractError("labels cover " + std::to_string(labels_.size()) + " individuals, expected " +
                        std::to_string(n));
  }
  for (const Matrix* m : {&b_hat_, &c_hat_}) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (mask_(i, j)) continue;
        const double v = (*m)(i, j);
        if (!std::isfinite(v) || std::abs(v) > 1.0 + Tolerances::correlation_range) {
          throw ContractError("correlation entry outside [-1,1]");
        }
        if (std::abs(v - (*m)(j, i)) > Tolerances::correlation_range) {
          throw ContractError("correlation matrix is not symmetric");
        }
        if (i == j && std::abs(v - 1.0) > Tolerances::correlation_range) {
          throw ContractError("correlation diagonal must equal one");
        }
      }
    }
  }
  diff_ = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!mask_(i, j)) diff_(i, j) = b_hat_(i, j) - c_hat_(i, j);
    }
  }
}

// ---------------------------------------------------------------- limit spec

LimitSpec::LimitSpec(Matrix q, Vector mu, Matrix sigma, Vector d)
    : q_(std::move(q)), mu_(std::move(mu)), sigma_(std::move(sigma)), d_(std::move(d)) {
  const auto k = q_.rows();
  if (mu_.size() != k || sigma_.rows() != k || sigma_.cols() != k) {
    throw ContractError("mu and Sigma must match the k rows of Q");
  }
  if (d_.size() != q_.cols()) throw ContractError("D must have one entry per individual");
  if (max_asymmetry(sigma_) > Tolerances::psd) throw ContractError("Sigma is not symmetric");
  const auto eig = eig_sym(0.5 * (sigma_ + sigma_.transpose()));
  if (eig.values()(eig.size() - 1) < -Tolerances::psd) {
    throw ContractError("Sigma is not positive semi-definite");
  }
  if (d_.minCoeff() < 0.0) throw ContractError("D entries must be non-negative");
}

LimitSpec LimitSpec::from_prior(Matrix q, Vector mu, Matrix sigma) {
  const Vector mean = q.transpose() * mu;
  const Vector cov_diag = (q.transpose() * sigma * q).diagonal();
  Vector d = 2.0 * (mean.array() - mean.array().square() - cov_diag.array()).matrix();
  return LimitSpec(std::move(q), std::move(mu), std::move(sigma), std::move(d));
}

}  // namespace residcorr
