#pragma once

#include <cstddef>
#include <vector>

#include "residcorr/core.hpp"
#include "residcorr/stream.hpp"

namespace residcorr {

enum class GramKind { pca1_adjusted, centered, standardized };

/// Symmetric n x n Gram-type matrix estimated from m_used SNPs.
class GramEstimate {
 public:
  GramEstimate(Matrix h, GramKind kind, std::size_t m_used);
  const Matrix& matrix() const { return h_; }
  GramKind kind() const { return kind_; }
  std::size_t m_used() const { return m_used_; }

 private:
  Matrix h_;
  GramKind kind_;
  std::size_t m_used_;
};

/// Per-SNP observed standard deviations (divisor n) of the kept SNPs.
struct ScalingDiag {
  std::vector<double> w;
  std::vector<std::size_t> kept_snps;
};

/// Exact integer sufficient statistics from one pass over G:
/// G'G, per-individual sums of G(2 - G), and per-individual sums of G.
struct GenotypeStats {
  std::size_t m = 0;
  Matrix gtg;
  Vector het_sum;
  Vector col_sum;
};

GenotypeStats accumulate_stats(GenotypeSource& source);
GenotypeStats accumulate_stats(const GenotypeMatrix& g);

HeterozygosityDiag heterozygosity_diag(const GenotypeMatrix& g);
HeterozygosityDiag heterozygosity_diag(const GenotypeStats& stats);

/// H = (1/m) G'G - diag(D).
GramEstimate gram_pca1(const GenotypeMatrix& g);
GramEstimate gram_pca1(const GenotypeStats& stats);

/// H1 = (1/m) (I - E/n) G'G (I - E/n).
GramEstimate gram_centered(const GenotypeMatrix& g);
GramEstimate gram_centered(const GenotypeStats& stats);

struct StandardizedGram {
  GramEstimate gram;
  ScalingDiag scaling;
};

/// (1/m') G2'G2 over SNPs with non-zero variance, G2 = W^-1 G (I - E/n).
StandardizedGram gram_standardized(GenotypeSource& source);
StandardizedGram gram_standardized(const GenotypeMatrix& g);

/// Projector together with the spectrum it was derived from.
struct PcaFit {
  ProjectionMatrix projection;
  EigenDecomposition eig;
  /// False when lambda_k' - lambda_k'+1 <= 1e-6 lambda_1 (a warning is emitted).
  bool eigen_gap_ok = true;
};

/// Top-k' eigenvectors of the PCA 1 Gram.
PcaFit fit_pca1(const GramEstimate& h, std::size_t k_prime);
/// Top k'-1 eigenvectors of a centered or standardized Gram plus the ones vector.
PcaFit fit_centered(const GramEstimate& h1, std::size_t k_prime, ProjectionMethod method);

ProjectionMatrix project_pca1(const GenotypeMatrix& g, std::size_t k_prime);
ProjectionMatrix project_pca2(const GenotypeMatrix& g, std::size_t k_prime);
ProjectionMatrix project_pca3(const GenotypeMatrix& g, std::size_t k_prime);
/// E/n: only the per-SNP mean is predicted (PCA on centred data with k' = 1).
ProjectionMatrix project_null(std::size_t n);
/// Q'(QQ')^-1 Q for a k' x n estimate of Q.
ProjectionMatrix project_from_q(const Matrix& q_hat);
/// Projector onto k' linearly independent rows of an m x n estimate of Pi.
ProjectionMatrix project_from_pi(const Matrix& pi_hat, std::size_t k_prime);

}  // namespace residcorr
