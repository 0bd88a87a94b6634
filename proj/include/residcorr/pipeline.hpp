#pragma once

#include <cstddef>
#include <memory>
#include <optional>

#include "residcorr/core.hpp"
#include "residcorr/diagnostics.hpp"
#include "residcorr/estimators.hpp"
#include "residcorr/stream.hpp"

namespace residcorr {

struct FitRequest {
  ProjectionMethod method = ProjectionMethod::pca1;
  std::size_t k_prime = 1;
  /// k' x n estimate of Q for from_q.
  const Matrix* q_hat = nullptr;
  /// m x n estimate of Pi for from_pi.
  const Matrix* pi_hat = nullptr;
};

struct FitResult {
  ProjectionMatrix projection;
  /// Spectrum of the Gram matrix behind a PCA projector.
  std::optional<EigenDecomposition> eig;
  bool eigen_gap_ok = true;
  HeterozygosityDiag d;
  CorrelationReport report;
  BlockSummary summary;
  std::size_t m = 0;
};

/// Holds the one-pass sufficient statistics of a genotype source so that
/// several projectors can be evaluated without re-reading the data. PCA 3
/// triggers one extra pass the first time it is requested.
class FitSession {
 public:
  /// The source must outlive the session when PCA 3 is requested.
  explicit FitSession(GenotypeSource& source);
  explicit FitSession(const GenotypeMatrix& genotypes);

  const GenotypeStats& stats() const { return stats_; }
  std::size_t num_individuals() const { return static_cast<std::size_t>(stats_.gtg.rows()); }

  ProjectionMatrix projection(const FitRequest& request, std::optional<EigenDecomposition>* eig = nullptr,
                              bool* gap_ok = nullptr);
  FitResult fit(const FitRequest& request, const PopulationLabels& labels);

 private:
  const StandardizedGram& standardized();

  std::unique_ptr<MatrixSource> owned_;
  GenotypeSource* source_;
  GenotypeStats stats_;
  std::optional<StandardizedGram> standardized_;
};

}  // namespace residcorr
