#include "residcorr/estimators.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>

#include "residcorr/config.hpp"
#include "residcorr/errors.hpp"
#include "residcorr/logging.hpp"
#include "residcorr/spectral.hpp"

namespace residcorr {

namespace {

void symmetrize_from_lower(Matrix& a) {
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
}

void check_k_range(std::size_t k_prime, std::size_t lo, std::size_t n, std::string_view what) {
  if (k_prime < lo || k_prime > n) {
    throw ContractError(std::string(what) + " needs " + std::to_string(lo) + " <= k' <= n = " +
                        std::to_string(n) + ", got k' = " + std::to_string(k_prime));
  }
}

bool check_gap(const EigenDecomposition& eig, std::size_t upper, std::string_view what) {
  // upper = number of leading eigenvectors used; compare lambda_upper with the next one.
  if (upper == 0 || upper >= eig.size()) return true;
  const Vector& l = eig.values();
  const double gap = l(static_cast<Eigen::Index>(upper) - 1) - l(static_cast<Eigen::Index>(upper));
  if (gap <= Tolerances::eigen_gap * std::abs(l(0))) {
    std::ostringstream msg;
    msg << what << ": eigenvalue condition fails (lambda_" << upper << " - lambda_" << upper + 1
        << " = " << gap << "); the projector is not well determined";
    warn(msg.str());
    return false;
  }
  return true;
}

struct StatsPartial {
  Matrix gtg;
  Vector het;
  Vector col;
};

}  // namespace

GramEstimate::GramEstimate(Matrix h, GramKind kind, std::size_t m_used)
    : h_(std::move(h)), kind_(kind), m_used_(m_used) {
  if (h_.rows() < 1 || h_.rows() != h_.cols()) throw ContractError("Gram estimate must be square");
  if (!h_.allFinite()) throw ContractError("Gram estimate has non-finite entries");
  if (max_asymmetry(h_) > Tolerances::gram_symmetry) {
    throw ContractError("Gram estimate is not symmetric");
  }
  if (kind_ == GramKind::centered) {
    const Vector he = h_ * Vector::Ones(h_.rows());
    if (he.cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, h_.norm())) {
      throw ContractError("centered Gram estimate does not annihilate the ones vector");
    }
  }
}

GenotypeStats accumulate_stats(GenotypeSource& source) {
  const std::size_t n = source.num_individuals();
  const auto ni = static_cast<Eigen::Index>(n);
  GenotypeStats stats;
  stats.gtg = Matrix::Zero(ni, ni);
  stats.het_sum = Vector::Zero(ni);
  stats.col_sum = Vector::Zero(ni);
  // Entries are small integers, so every partial sum below is exact in double.
  stats.m = stream_reduce<StatsPartial>(
      source,
      [&](const GenotypeBlock& block) {
        const Matrix x = block_to_matrix(block, n);
        StatsPartial p{Matrix::Zero(ni, ni), Vector::Zero(ni), Vector::Zero(ni)};
        p.gtg.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
        p.col = x.colwise().sum().transpose();
        p.het = (x.array() * (2.0 - x.array())).colwise().sum().transpose();
        return p;
      },
      [&](StatsPartial&& p) {
        stats.gtg.triangularView<Eigen::Lower>() += p.gtg;
        stats.het_sum += p.het;
        stats.col_sum += p.col;
      });
  if (stats.m == 0) throw DataError("no SNPs");
  symmetrize_from_lower(stats.gtg);
  return stats;
}

GenotypeStats accumulate_stats(const GenotypeMatrix& g) {
  MatrixSource source(g);
  return accumulate_stats(source);
}

HeterozygosityDiag heterozygosity_diag(const GenotypeStats& stats) {
  return HeterozygosityDiag(stats.het_sum / static_cast<double>(stats.m));
}

HeterozygosityDiag heterozygosity_diag(const GenotypeMatrix& g) {
  const std::size_t m = g.num_snps();
  const std::size_t n = g.num_individuals();
  std::vector<std::uint64_t> counts(n, 0);
  for (std::size_t s = 0; s < m; ++s) {
    const auto row = g.row(s);
    for (std::size_t i = 0; i < n; ++i) counts[i] += row[i] == 1;  // G(2-G) is 1 only for hets
  }
  Vector d(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) d(static_cast<Eigen::Index>(i)) = double(counts[i]) / double(m);
  return HeterozygosityDiag(std::move(d));
}

GramEstimate gram_pca1(const GenotypeStats& stats) {
  const double m = static_cast<double>(stats.m);
  Matrix h = stats.gtg / m;
  h.diagonal() -= stats.het_sum / m;
  return GramEstimate(std::move(h), GramKind::pca1_adjusted, stats.m);
}

GramEstimate gram_pca1(const GenotypeMatrix& g) { return gram_pca1(accumulate_stats(g)); }

GramEstimate gram_centered(const GenotypeStats& stats) {
  const double m = static_cast<double>(stats.m);
  const Matrix a = stats.gtg / m;
  const Vector row_mean = a.rowwise().mean();
  const double grand = row_mean.mean();
  Matrix h = a;
  h.colwise() -= row_mean;
  h.rowwise() -= row_mean.transpose();
  h.array() += grand;
  h = (0.5 * (h + h.transpose())).eval();
  // Remove the rounding left in the row sums so that H1 e = 0 holds tightly.
  const Vector rs = h.rowwise().mean();
  h.colwise() -= rs;
  h.rowwise() -= rs.transpose();
  h.array() += rs.mean();
  h = (0.5 * (h + h.transpose())).eval();
  return GramEstimate(std::move(h), GramKind::centered, stats.m);
}

GramEstimate gram_centered(const GenotypeMatrix& g) { return gram_centered(accumulate_stats(g)); }

StandardizedGram gram_standardized(GenotypeSource& source) {
  const std::size_t n = source.num_individuals();
  const auto ni = static_cast<Eigen::Index>(n);
  struct Partial {
    Matrix lower;
    std::vector<double> w;
    std::vector<std::size_t> kept;
  };
  Matrix acc = Matrix::Zero(ni, ni);
  ScalingDiag scaling;
  stream_reduce<Partial>(
      source,
      [&](const GenotypeBlock& block) {
        Partial p{Matrix::Zero(ni, ni), {}, {}};
        Matrix x(static_cast<Eigen::Index>(block.rows), ni);
        Eigen::Index used = 0;
        for (std::size_t s = 0; s < block.rows; ++s) {
          const std::uint8_t* row = block.data.data() + s * n;
          std::int64_t sum = 0;
          std::int64_t sum_sq = 0;
          for (std::size_t i = 0; i < n; ++i) {
            sum += row[i];
            sum_sq += row[i] * row[i];
          }
          // n^2 var = n sum_sq - sum^2, exact in integers.
          const std::int64_t scaled_var = static_cast<std::int64_t>(n) * sum_sq - sum * sum;
          if (scaled_var <= 0) continue;
          const double mean = double(sum) / double(n);
          const double w = std::sqrt(double(scaled_var)) / double(n);
          for (std::size_t i = 0; i < n; ++i) x(used, static_cast<Eigen::Index>(i)) = (row[i] - mean) / w;
          p.w.push_back(w);
          p.kept.push_back(block.first_snp + s);
          ++used;
        }
        if (used > 0) {
          p.lower.selfadjointView<Eigen::Lower>().rankUpdate(x.topRows(used).transpose());
        }
        return p;
      },
      [&](Partial&& p) {
        acc.triangularView<Eigen::Lower>() += p.lower;
        scaling.w.insert(scaling.w.end(), p.w.begin(), p.w.end());
        scaling.kept_snps.insert(scaling.kept_snps.end(), p.kept.begin(), p.kept.end());
      });
  const std::size_t m_prime = scaling.kept_snps.size();
  if (m_prime == 0) throw DegenerateError("all SNPs have zero variance; PCA 3 is undefined");
  symmetrize_from_lower(acc);
  acc /= static_cast<double>(m_prime);
  return {GramEstimate(std::move(acc), GramKind::standardized, m_prime), std::move(scaling)};
}

StandardizedGram gram_standardized(const GenotypeMatrix& g) {
  MatrixSource source(g);
  return gram_standardized(source);
}

PcaFit fit_pca1(const GramEstimate& h, std::size_t k_prime) {
  const std::size_t n = static_cast<std::size_t>(h.matrix().rows());
  check_k_range(k_prime, 1, n, "PCA 1");
  auto eig = eig_sym(h.matrix());
  const bool ok = check_gap(eig, k_prime, "PCA 1");
  auto p = top_eigen_projector(eig, k_prime, ProjectionMethod::pca1);
  return {std::move(p), std::move(eig), ok};
}

PcaFit fit_centered(const GramEstimate& h1, std::size_t k_prime, ProjectionMethod method) {
  const std::size_t n = static_cast<std::size_t>(h1.matrix().rows());
  check_k_range(k_prime, 2, n, method == ProjectionMethod::pca3 ? "PCA 3" : "PCA 2");
  auto eig = eig_sym(h1.matrix());
  const bool ok = check_gap(eig, k_prime - 1, method == ProjectionMethod::pca3 ? "PCA 3" : "PCA 2");
  const auto ni = static_cast<Eigen::Index>(n);
  const auto used = static_cast<Eigen::Index>(k_prime - 1);
  Matrix rows(used + 1, ni);
  rows.topRows(used) = eig.vectors().leftCols(used).transpose();
  rows.row(used).setOnes();
  auto basis = gram_schmidt_pivoted(rows);
  if (basis.rank() < k_prime) {
    // Only reachable when e ties with a leading eigenvector; take the next ones instead.
    Matrix all(ni + 1, ni);
    all.row(0).setOnes();
    all.bottomRows(ni) = eig.vectors().transpose();
    basis = gram_schmidt_pivoted(all, Tolerances::gram_schmidt, k_prime);
  }
  if (basis.rank() < k_prime) {
    throw DegenerateError("could not assemble a rank-" + std::to_string(k_prime) + " basis");
  }
  auto p = projector_from_basis(basis, method);
  return {std::move(p), std::move(eig), ok};
}

ProjectionMatrix project_pca1(const GenotypeMatrix& g, std::size_t k_prime) {
  check_k_range(k_prime, 1, g.num_individuals(), "PCA 1");
  return fit_pca1(gram_pca1(g), k_prime).projection;
}

ProjectionMatrix project_pca2(const GenotypeMatrix& g, std::size_t k_prime) {
  check_k_range(k_prime, 2, g.num_individuals(), "PCA 2");
  return fit_centered(gram_centered(g), k_prime, ProjectionMethod::pca2).projection;
}

ProjectionMatrix project_pca3(const GenotypeMatrix& g, std::size_t k_prime) {
  check_k_range(k_prime, 2, g.num_individuals(), "PCA 3");
  return fit_centered(gram_standardized(g).gram, k_prime, ProjectionMethod::pca3).projection;
}

ProjectionMatrix project_null(std::size_t n) {
  if (n < 1) throw ContractError("project_null needs n >= 1");
  const auto ni = static_cast<Eigen::Index>(n);
  return ProjectionMatrix(Matrix::Constant(ni, ni, 1.0 / double(n)), 1, ProjectionMethod::pca_null);
}

ProjectionMatrix project_from_q(const Matrix& q_hat) {
  if (q_hat.rows() < 1 || q_hat.cols() < 1) throw ContractError("Q_hat is empty");
  if (!q_hat.allFinite()) throw DataError("Q_hat has non-finite entries");
  const auto basis = gram_schmidt_pivoted(q_hat);
  if (basis.rank() != static_cast<std::size_t>(q_hat.rows())) {
    throw DegenerateError("Q_hat has numerical rank " + std::to_string(basis.rank()) +
                          ", expected k' = " + std::to_string(q_hat.rows()));
  }
  return projector_from_basis(basis, ProjectionMethod::from_q);
}

ProjectionMatrix project_from_pi(const Matrix& pi_hat, std::size_t k_prime) {
  const auto n = static_cast<std::size_t>(pi_hat.cols());
  check_k_range(k_prime, 1, n, "projection from Pi");
  if (!pi_hat.allFinite()) throw DataError("Pi_hat has non-finite entries");
  const auto basis = gram_schmidt_pivoted(pi_hat, Tolerances::gram_schmidt, k_prime);
  if (basis.rank() < k_prime) {
    throw DegenerateError("Pi_hat has numerical rank " + std::to_string(basis.rank()) +
                          " < k' = " + std::to_string(k_prime));
  }
  return projector_from_basis(basis, ProjectionMethod::from_pi);
}

}  // namespace residcorr
