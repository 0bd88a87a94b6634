#include "residcorr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "residcorr/config.hpp"
#include "residcorr/errors.hpp"

namespace residcorr {

namespace {

Matrix complement(const ProjectionMatrix& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  return Matrix::Identity(n, n) - p.matrix();
}

Matrix symmetric(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Residual covariance over SNPs from RtR = sum_s R_s' R_s and the column sums of R.
Matrix covariance_from_moments(const Matrix& rtr, const Vector& col_sum, std::size_t m) {
  if (m < 2) throw DegenerateError("at least two SNPs are needed for a residual covariance");
  const double md = static_cast<double>(m);
  const Vector mean = col_sum / md;
  return symmetric((rtr - md * mean * mean.transpose()) / (md - 1.0));
}

BlockStat finish(std::size_t a, std::size_t b, SummaryStat stat, const std::vector<double>& values) {
  BlockStat out;
  out.block_a = a;
  out.block_b = b;
  out.stat = stat;
  out.count = values.size();
  if (values.empty()) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  out.mean = mean;
  out.sd = values.size() > 1 ? std::sqrt(ss / double(values.size() - 1)) : 0.0;
  return out;
}

}  // namespace

ResidualMatrix::ResidualMatrix(Matrix r, const ProjectionMatrix& p)
    : r_(std::move(r)), k_prime_(p.k_prime()), method_(p.method()) {
  if (static_cast<std::size_t>(r_.cols()) != p.size()) {
    throw ContractError("residual matrix has " + std::to_string(r_.cols()) + " columns, expected " +
                        std::to_string(p.size()));
  }
  if (p.contains_ones() && r_.rows() > 0) {
    const double scale = std::max(1.0, r_.cwiseAbs().maxCoeff()) * double(r_.cols());
    const double worst = r_.rowwise().sum().cwiseAbs().maxCoeff();
    if (worst > 1e-8 * scale) throw ContractError("residual rows do not sum to zero although P e = e");
  }
}

CovarianceCorrelation normalize_covariance(Matrix covariance) {
  const auto n = covariance.rows();
  if (n < 1 || covariance.cols() != n) throw ContractError("covariance must be square");
  const Vector d = covariance.diagonal();
  Matrix corr = Matrix::Zero(n, n);
  BoolMatrix undefined = BoolMatrix::Constant(n, n, false);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(d(i) > Tolerances::variance_floor) || !(d(j) > Tolerances::variance_floor)) {
        undefined(i, j) = true;
        continue;
      }
      corr(i, j) = i == j ? 1.0 : std::clamp(covariance(i, j) / std::sqrt(d(i) * d(j)), -1.0, 1.0);
    }
  }
  return {std::move(covariance), std::move(corr), std::move(undefined)};
}

ResidualMatrix residuals(const GenotypeMatrix& g, const ProjectionMatrix& p) {
  if (g.num_individuals() != p.size()) throw ContractError("G and P disagree on n");
  GenotypeBlock block{0, g.num_snps(), g.data()};
  const Matrix x = block_to_matrix(block, g.num_individuals());
  return ResidualMatrix(x * complement(p), p);
}

CovarianceCorrelation empirical_corr(const ResidualMatrix& r) {
  const Matrix& x = r.matrix();
  const auto n = x.cols();
  Matrix rtr = Matrix::Zero(n, n);
  rtr.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  rtr.triangularView<Eigen::StrictlyUpper>() = rtr.transpose();
  return normalize_covariance(
      covariance_from_moments(rtr, x.colwise().sum().transpose(), static_cast<std::size_t>(x.rows())));
}

CovarianceCorrelation empirical_corr(GenotypeSource& source, const ProjectionMatrix& p) {
  const std::size_t n = source.num_individuals();
  if (n != p.size()) throw ContractError("genotypes and P disagree on n");
  const auto ni = static_cast<Eigen::Index>(n);
  const Matrix comp = complement(p);
  struct Partial {
    Matrix rtr;
    Vector col;
  };
  Matrix rtr = Matrix::Zero(ni, ni);
  Vector col = Vector::Zero(ni);
  const std::size_t m = stream_reduce<Partial>(
      source,
      [&](const GenotypeBlock& block) {
        const Matrix r = block_to_matrix(block, n) * comp;
        Partial part{Matrix::Zero(ni, ni), r.colwise().sum().transpose()};
        part.rtr.selfadjointView<Eigen::Lower>().rankUpdate(r.transpose());
        return part;
      },
      [&](Partial&& part) {
        rtr.triangularView<Eigen::Lower>() += part.rtr;
        col += part.col;
      });
  rtr.triangularView<Eigen::StrictlyUpper>() = rtr.transpose();
  return normalize_covariance(covariance_from_moments(rtr, col, m));
}

CovarianceCorrelation empirical_corr(const GenotypeStats& stats, const ProjectionMatrix& p) {
  if (static_cast<std::size_t>(stats.gtg.rows()) != p.size()) {
    throw ContractError("genotype statistics and P disagree on n");
  }
  const Matrix comp = complement(p);
  const Matrix rtr = symmetric(comp * stats.gtg * comp);
  return normalize_covariance(covariance_from_moments(rtr, comp * stats.col_sum, stats.m));
}

CovarianceCorrelation estimated_corr(const ProjectionMatrix& p, const HeterozygosityDiag& d) {
  if (d.size() != p.size()) throw ContractError("D and P disagree on n");
  const Matrix comp = complement(p);
  return normalize_covariance(symmetric(comp * d.values().asDiagonal() * comp));
}

CorrelationReport corrected_corr(const CovarianceCorrelation& empirical,
                                 const CovarianceCorrelation& estimated, PopulationLabels labels) {
  if (empirical.correlation.rows() != estimated.correlation.rows()) {
    throw ContractError("empirical and estimated correlations differ in size");
  }
  BoolMatrix mask = empirical.undefined.array() || estimated.undefined.array();
  return CorrelationReport(empirical.correlation, estimated.correlation, std::move(mask),
                           std::move(labels));
}

std::string_view to_string(SummaryStat stat) {
  return stat == SummaryStat::b_hat ? "b_hat" : "diff";
}

const BlockStat* BlockSummary::find(std::size_t a, std::size_t b, SummaryStat stat) const {
  for (const auto& s : stats) {
    if (s.stat != stat) continue;
    if ((s.block_a == a && s.block_b == b) || (s.block_a == b && s.block_b == a)) return &s;
  }
  return nullptr;
}

std::optional<double> BlockSummary::within_mean(std::size_t block, SummaryStat stat) const {
  const BlockStat* s = find(block, block, stat);
  if (s == nullptr || s->count == 0) return std::nullopt;
  return s->mean;
}

double BlockSummary::max_abs_within_diff() const {
  double worst = 0.0;
  for (std::size_t b = 0; b < names.size(); ++b) {
    if (const auto v = within_mean(b, SummaryStat::diff)) worst = std::max(worst, std::abs(*v));
  }
  return worst;
}

BlockSummary block_summary(const CorrelationReport& report) {
  const PopulationLabels& labels = report.labels();
  const std::size_t k = labels.num_blocks();
  BlockSummary out;
  out.names = labels.names();
  out.sizes = labels.block_sizes();
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t b = 0; b < k; ++b) members[b] = labels.members(b);
  const BoolMatrix& mask = report.undefined_mask();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      for (const SummaryStat stat : {SummaryStat::b_hat, SummaryStat::diff}) {
        const Matrix& m = stat == SummaryStat::b_hat ? report.b_hat() : report.diff();
        std::vector<double> values;
        for (const std::size_t i : members[a]) {
          for (const std::size_t j : members[b]) {
            if (a == b && j <= i) continue;
            const auto ii = static_cast<Eigen::Index>(i);
            const auto jj = static_cast<Eigen::Index>(j);
            if (!mask(ii, jj)) values.push_back(m(ii, jj));
          }
        }
        BlockStat s = finish(a, b, stat, values);
        if (a == b && stat == SummaryStat::b_hat && out.sizes[a] > 1) {
          s.reference = -1.0 / (double(out.sizes[a]) - 1.0);
        }
        out.stats.push_back(s);
      }
    }
  }
  return out;
}

double sum_ratio(const Matrix& b) {
  if (b.rows() < 1 || b.rows() != b.cols()) throw ContractError("sum_ratio needs a square matrix");
  const double trace = b.trace();
  if (!(std::abs(trace) > 0.0)) throw DegenerateError("sum_ratio: zero trace");
  return (b.sum() - trace) / trace;
}

LimitMatrices limit_oracle(const LimitSpec& spec, const ProjectionMatrix& p_limit) {
  const auto n = spec.q().cols();
  if (static_cast<std::size_t>(n) != p_limit.size()) throw ContractError("LimitSpec and P disagree on n");
  const Matrix comp = complement(p_limit);
  const Matrix qsq = spec.q().transpose() * spec.sigma() * spec.q();
  Matrix inner = 4.0 * qsq;
  inner.diagonal() += spec.d();
  LimitMatrices out;
  out.b_cov = symmetric(comp * inner * comp);
  out.c_cov = symmetric(comp * spec.d().asDiagonal() * comp);
  out.b_corr = normalize_covariance(out.b_cov).correlation;
  out.c_corr = normalize_covariance(out.c_cov).correlation;
  out.diff = out.b_corr - out.c_corr;
  return out;
}

BoundCheck homogeneity_bound_check(const CorrelationReport& report, std::size_t block) {
  const PopulationLabels& labels = report.labels();
  if (block >= labels.num_blocks()) throw ContractError("no such block");
  const auto members = labels.members(block);
  if (members.size() < 2) throw ContractError("the bound needs a block with at least two members");
  std::vector<double> values;
  for (std::size_t x = 0; x < members.size(); ++x) {
    for (std::size_t y = x + 1; y < members.size(); ++y) {
      const auto i = static_cast<Eigen::Index>(members[x]);
      const auto j = static_cast<Eigen::Index>(members[y]);
      if (!report.undefined_mask()(i, j)) values.push_back(report.b_hat()(i, j));
    }
  }
  if (values.empty()) throw DegenerateError("every within-block correlation is undefined");
  const BlockStat s = finish(block, block, SummaryStat::b_hat, values);
  BoundCheck out;
  out.bound = -1.0 / (double(members.size()) - 1.0);
  out.statistic = s.mean;
  out.slack = 3.0 * s.sd;
  out.margin = out.statistic - out.bound;
  out.passed = out.statistic >= out.bound - out.slack;
  return out;
}

std::vector<std::size_t> display_order(const PopulationLabels& labels, const Matrix* q_hat) {
  if (q_hat != nullptr && static_cast<std::size_t>(q_hat->cols()) != labels.size()) {
    throw ContractError("Q_hat and labels disagree on n");
  }
  std::vector<std::size_t> order;
  order.reserve(labels.size());
  for (std::size_t b = 0; b < labels.num_blocks(); ++b) {
    auto members = labels.members(b);
    if (q_hat != nullptr && !members.empty()) {
      Vector totals = Vector::Zero(q_hat->rows());
      for (const std::size_t i : members) totals += q_hat->col(static_cast<Eigen::Index>(i));
      Eigen::Index dominant = 0;
      totals.maxCoeff(&dominant);
      std::stable_sort(members.begin(), members.end(), [&](std::size_t x, std::size_t y) {
        return (*q_hat)(dominant, static_cast<Eigen::Index>(x)) >
               (*q_hat)(dominant, static_cast<Eigen::Index>(y));
      });
    }
    order.insert(order.end(), members.begin(), members.end());
  }
  return order;
}

}  // namespace residcorr
