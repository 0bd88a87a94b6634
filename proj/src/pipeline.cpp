#include "residcorr/pipeline.hpp"

#include "residcorr/errors.hpp"

namespace residcorr {

FitSession::FitSession(GenotypeSource& source) : source_(&source), stats_(accumulate_stats(source)) {}

FitSession::FitSession(const GenotypeMatrix& genotypes)
    : owned_(std::make_unique<MatrixSource>(genotypes)),
      source_(owned_.get()),
      stats_(accumulate_stats(*owned_)) {}

const StandardizedGram& FitSession::standardized() {
  if (!standardized_) standardized_.emplace(gram_standardized(*source_));
  return *standardized_;
}

ProjectionMatrix FitSession::projection(const FitRequest& request,
                                        std::optional<EigenDecomposition>* eig, bool* gap_ok) {
  const std::size_t n = num_individuals();
  auto keep = [&](PcaFit&& fit) {
    if (eig != nullptr) *eig = std::move(fit.eig);
    if (gap_ok != nullptr) *gap_ok = fit.eigen_gap_ok;
    return std::move(fit.projection);
  };
  switch (request.method) {
    case ProjectionMethod::pca1:
      return keep(fit_pca1(gram_pca1(stats_), request.k_prime));
    case ProjectionMethod::pca2:
      return keep(fit_centered(gram_centered(stats_), request.k_prime, ProjectionMethod::pca2));
    case ProjectionMethod::pca3:
      if (request.k_prime < 2 || request.k_prime > n) {
        throw ContractError("PCA 3 needs 2 <= k' <= n = " + std::to_string(n) + ", got k' = " +
                            std::to_string(request.k_prime));
      }
      return keep(fit_centered(standardized().gram, request.k_prime, ProjectionMethod::pca3));
    case ProjectionMethod::pca_null:
      if (request.k_prime != 1) throw ContractError("pca-null has k' = 1");
      return project_null(n);
    case ProjectionMethod::from_q:
    case ProjectionMethod::exact:
      if (request.q_hat == nullptr) throw ContractError("projection from Q needs Q_hat");
      if (static_cast<std::size_t>(request.q_hat->cols()) != n) {
        throw ContractError("Q_hat covers " + std::to_string(request.q_hat->cols()) +
                            " individuals, the genotypes " + std::to_string(n));
      }
      return project_from_q(*request.q_hat);
    case ProjectionMethod::from_pi:
      if (request.pi_hat == nullptr) throw ContractError("projection from Pi needs Pi_hat");
      if (static_cast<std::size_t>(request.pi_hat->cols()) != n) {
        throw ContractError("Pi_hat covers " + std::to_string(request.pi_hat->cols()) +
                            " individuals, the genotypes " + std::to_string(n));
      }
      return project_from_pi(*request.pi_hat, request.k_prime);
  }
  throw ContractError("unknown projection method");
}

FitResult FitSession::fit(const FitRequest& request, const PopulationLabels& labels) {
  if (labels.size() != num_individuals()) {
    throw DataError("labels cover " + std::to_string(labels.size()) + " individuals, the genotypes " +
                    std::to_string(num_individuals()));
  }
  std::optional<EigenDecomposition> eig;
  bool gap_ok = true;
  ProjectionMatrix p = projection(request, &eig, &gap_ok);
  HeterozygosityDiag d = heterozygosity_diag(stats_);
  CorrelationReport report = corrected_corr(empirical_corr(stats_, p), estimated_corr(p, d), labels);
  BlockSummary summary = block_summary(report);
  return {std::move(p), std::move(eig), gap_ok, std::move(d), std::move(report), std::move(summary),
          stats_.m};
}

}  // namespace residcorr
