#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "residcorr/core.hpp"
#include "residcorr/estimators.hpp"
#include "residcorr/stream.hpp"

namespace residcorr {

/// R = G (I - P), m x n.
class ResidualMatrix {
 public:
  /// Checks the zero row-sum invariant whenever P e = e.
  ResidualMatrix(Matrix r, const ProjectionMatrix& p);
  const Matrix& matrix() const { return r_; }
  std::size_t k_prime() const { return k_prime_; }
  ProjectionMethod method() const { return method_; }

 private:
  Matrix r_;
  std::size_t k_prime_;
  ProjectionMethod method_;
};

/// Covariance, its correlation normalization, and entries whose variance
/// denominator fell below the floor (set to zero in `correlation`).
struct CovarianceCorrelation {
  Matrix covariance;
  Matrix correlation;
  BoolMatrix undefined;
};

CovarianceCorrelation normalize_covariance(Matrix covariance);

ResidualMatrix residuals(const GenotypeMatrix& g, const ProjectionMatrix& p);

/// B = 1/(m-1) sum_s (R_s - Rbar)(R_s - Rbar)' and its correlation b.
CovarianceCorrelation empirical_corr(const ResidualMatrix& r);
/// Same quantities with residual blocks G_b (I - P) formed on the fly.
CovarianceCorrelation empirical_corr(GenotypeSource& source, const ProjectionMatrix& p);
/// Same quantities from G'G and the column sums: R'R = (I-P) G'G (I-P).
CovarianceCorrelation empirical_corr(const GenotypeStats& stats, const ProjectionMatrix& p);

/// C = (I - P) D (I - P) and its correlation c.
CovarianceCorrelation estimated_corr(const ProjectionMatrix& p, const HeterozygosityDiag& d);

/// b - c with the union of both masks.
CorrelationReport corrected_corr(const CovarianceCorrelation& empirical,
                                 const CovarianceCorrelation& estimated,
                                 PopulationLabels labels);

enum class SummaryStat { b_hat, diff };
std::string_view to_string(SummaryStat stat);

struct BlockStat {
  std::size_t block_a = 0;
  std::size_t block_b = 0;
  SummaryStat stat = SummaryStat::b_hat;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
  /// -1/(n_l - 1) on within-block b_hat rows.
  std::optional<double> reference;
};

struct BlockSummary {
  std::vector<std::string> names;
  std::vector<std::size_t> sizes;
  std::vector<BlockStat> stats;

  const BlockStat* find(std::size_t a, std::size_t b, SummaryStat stat) const;
  /// Mean over off-diagonal within-block entries; empty for blocks of size 1.
  std::optional<double> within_mean(std::size_t block, SummaryStat stat) const;
  /// Largest |within-block mean of b - c| over blocks of size > 1.
  double max_abs_within_diff() const;
};

BlockSummary block_summary(const CorrelationReport& report);

/// (sum_{i != j} B_ij) / (sum_i B_ii).
double sum_ratio(const Matrix& b);

struct LimitMatrices {
  Matrix b_cov;
  Matrix c_cov;
  Matrix b_corr;
  Matrix c_corr;
  Matrix diff;
};

/// B -> (I-P)(D + 4Q'SigmaQ)(I-P) and C -> (I-P)D(I-P), with correlations.
LimitMatrices limit_oracle(const LimitSpec& spec, const ProjectionMatrix& p_limit);

struct BoundCheck {
  bool passed = false;
  double margin = 0.0;
  /// Within-block mean of b_hat.
  double statistic = 0.0;
  double bound = 0.0;
  double slack = 0.0;
};

/// Lower bound -1/(n1 - 1) on the within-block mean of b_hat for a homogeneous
/// block, with a slack of three within-block standard deviations for finite m.
BoundCheck homogeneity_bound_check(const CorrelationReport& report, std::size_t block);

/// Individual order for display: block by block; inside a block, descending
/// proportion of the block's dominant component when Q_hat is given.
std::vector<std::size_t> display_order(const PopulationLabels& labels,
                                       const Matrix* q_hat = nullptr);

}  // namespace residcorr
