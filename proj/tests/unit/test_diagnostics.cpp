#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "residcorr/diagnostics.hpp"
#include "residcorr/errors.hpp"
#include "residcorr/estimators.hpp"
#include "residcorr/pipeline.hpp"
#include "residcorr/simulate.hpp"

using namespace residcorr;

namespace {

SimulatedDataset scenario(int id, std::vector<std::size_t> sizes, std::size_t m, std::uint64_t seed) {
  auto spec = ScenarioSpec::preset(id);
  spec.sizes = std::move(sizes);
  spec.m = m;
  spec.seed = seed;
  return simulate(spec);
}

ProjectionMatrix zero_projector(std::size_t n) {
  const auto nn = static_cast<Eigen::Index>(n);
  return ProjectionMatrix(Matrix::Zero(nn, nn), 0, ProjectionMethod::exact);
}

ProjectionMatrix exact(const Matrix& q) {
  return ProjectionMatrix(testutil::exact_projector(q), static_cast<std::size_t>(q.rows()), ProjectionMethod::exact);
}

FitResult fit(const SimulatedDataset& data, ProjectionMethod method, std::size_t k) {
  FitSession session(data.genotypes);
  FitRequest request;
  request.method = method;
  request.k_prime = k;
  if (method == ProjectionMethod::from_q) request.q_hat = &data.truth->q();
  return session.fit(request, data.labels);
}

/// Correlation of (I-P) A (I-P) computed entry by entry.
Matrix dense_limit_corr(const Matrix& a, const Matrix& p) {
  const auto n = a.rows();
  Matrix comp = -p;
  for (Eigen::Index i = 0; i < n; ++i) comp(i, i) += 1.0;
  Matrix cov = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index x = 0; x < n; ++x) {
        for (Eigen::Index y = 0; y < n; ++y) s += comp(i, x) * a(x, y) * comp(y, j);
      }
      cov(i, j) = s;
    }
  }
  Matrix corr(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) corr(i, j) = cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
  }
  return corr;
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("residual examples") {
    const auto g = testutil::genotypes(2, 3, {0, 1, 2, 2, 2, 1});
    CHECK(residuals(g, zero_projector(3)).matrix() == testutil::as_matrix(g));
    const ProjectionMatrix identity(Matrix::Identity(3, 3), 3, ProjectionMethod::exact);
    CHECK(residuals(g, identity).matrix().isZero());
    const Matrix r = residuals(g, project_null(3)).matrix();
    CHECK(std::abs(r(0, 0) + 1.0) < 1e-12);
    CHECK(std::abs(r(0, 1)) < 1e-12);
    CHECK(std::abs(r(0, 2) - 1.0) < 1e-12);
    CHECK_THROWS_AS(residuals(g, project_null(4)), ContractError);
  }

  TEST_CASE("residual rows sum to zero when the projector holds the ones vector") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
      const auto g = testutil::random_genotypes(300, 10, 40 + static_cast<std::uint64_t>(trial));
      Matrix q = testutil::random_matrix(3, 10, rng, 0, 1);
      for (Eigen::Index i = 0; i < 10; ++i) q.col(i) /= q.col(i).sum();
      for (const auto& p : {project_pca2(g, 3), project_pca3(g, 3), project_from_q(q)}) {
        REQUIRE(p.contains_ones());
        REQUIRE(residuals(g, p).matrix().rowwise().sum().cwiseAbs().maxCoeff() < 1e-6);
      }
    }
  }

  TEST_CASE("identical and opposite columns") {
    Matrix r(4, 3);
    r << 1, 1, -1, 2, 2, -2, 0, 0, 0, 5, 5, -5;
    const auto corr = empirical_corr(ResidualMatrix(r, zero_projector(3))).correlation;
    CHECK(corr(0, 1) == doctest::Approx(1.0));
    CHECK(corr(0, 2) == doctest::Approx(-1.0));
    CHECK(corr(1, 1) == 1.0);
  }

  TEST_CASE("zero residual variance is masked") {
    const auto g = testutil::random_genotypes(50, 4, 2);
    const ProjectionMatrix identity(Matrix::Identity(4, 4), 4, ProjectionMethod::exact);
    const auto b = empirical_corr(residuals(g, identity));
    CHECK(b.undefined.count() == 16);
    CHECK(b.correlation.allFinite());
    const auto c = estimated_corr(identity, heterozygosity_diag(g));
    const auto report = corrected_corr(b, c, PopulationLabels::single(4));
    CHECK(report.diff().allFinite());
    const auto summary = block_summary(report);
    CHECK_FALSE(summary.within_mean(0, SummaryStat::diff).has_value());
    CHECK(summary.max_abs_within_diff() == 0.0);
  }

  TEST_CASE("single pass, streamed and Gram-based covariances agree") {
    const auto g = testutil::random_genotypes(20000, 12, 8);
    const auto p = project_pca1(g, 3);
    const auto direct = empirical_corr(residuals(g, p));
    MatrixSource source(g);
    const auto streamed = empirical_corr(source, p);
    const auto from_stats = empirical_corr(accumulate_stats(g), p);
    CHECK((direct.covariance - streamed.covariance).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((direct.covariance - from_stats.covariance).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((direct.correlation - from_stats.correlation).cwiseAbs().maxCoeff() < 1e-10);
    const Matrix r = residuals(g, p).matrix();
    const Matrix centered = r.rowwise() - r.colwise().mean();
    CHECK((direct.covariance - centered.transpose() * centered / 19999.0).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("estimated correlation examples") {
    const Vector d = (Vector(3) << 0.2, 0.4, 0.5).finished();
    const auto c0 = estimated_corr(zero_projector(3), HeterozygosityDiag(d));
    CHECK(c0.covariance.isApprox(Matrix(d.asDiagonal())));
    CHECK(c0.correlation.isApprox(Matrix::Identity(3, 3)));
    const auto c1 = estimated_corr(project_null(5), HeterozygosityDiag(Vector::Constant(5, 0.3)));
    const Matrix expected = 0.3 * (Matrix::Identity(5, 5) - Matrix::Constant(5, 5, 0.2));
    CHECK((c1.covariance - expected).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(c1.correlation(0, 3) == doctest::Approx(-0.25));
  }

  TEST_CASE("estimated covariance is positive semi-definite") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial) {
      const auto g = testutil::random_genotypes(200, 9, 60 + static_cast<std::uint64_t>(trial));
      const auto c = estimated_corr(project_pca2(g, 2 + static_cast<std::size_t>(trial % 5)), heterozygosity_diag(g));
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(c.covariance);
      REQUIRE(eig.eigenvalues().minCoeff() >= -1e-8);
    }
  }

  TEST_CASE("equal correlations give a zero difference") {
    const auto g = testutil::random_genotypes(100, 5, 3);
    const auto b = empirical_corr(residuals(g, project_null(5)));
    const auto report = corrected_corr(b, b, PopulationLabels::single(5));
    CHECK(report.diff().isZero());
  }

  TEST_CASE("block summary of constant blocks") {
    Matrix b = Matrix::Constant(5, 5, -0.2);
    b.bottomRightCorner(2, 2).setConstant(0.3);
    b.topRightCorner(3, 2).setConstant(0.1);
    b.bottomLeftCorner(2, 3).setConstant(0.1);
    b.diagonal().setOnes();
    const std::vector<std::size_t> sizes{3, 2};
    const CorrelationReport report(b, b, BoolMatrix::Constant(5, 5, false), PopulationLabels::from_sizes(sizes));
    const auto summary = block_summary(report);
    const auto* s = summary.find(0, 0, SummaryStat::b_hat);
    REQUIRE(s != nullptr);
    CHECK(s->mean == doctest::Approx(-0.2));
    CHECK(s->sd == doctest::Approx(0.0));
    CHECK(s->count == 3);
    CHECK(*s->reference == doctest::Approx(-0.5));
    CHECK(summary.find(0, 1, SummaryStat::b_hat)->mean == doctest::Approx(0.1));
    CHECK(summary.find(0, 1, SummaryStat::b_hat)->count == 6);
    CHECK(*summary.within_mean(1, SummaryStat::b_hat) == doctest::Approx(0.3));
    CHECK(*summary.within_mean(1, SummaryStat::diff) == doctest::Approx(0.0));
  }

  TEST_CASE("singleton blocks have no within-block statistics") {
    const std::vector<std::size_t> sizes{1, 3};
    const CorrelationReport report(Matrix::Identity(4, 4), Matrix::Identity(4, 4), BoolMatrix::Constant(4, 4, false),
                                   PopulationLabels::from_sizes(sizes));
    const auto summary = block_summary(report);
    CHECK_FALSE(summary.within_mean(0, SummaryStat::b_hat).has_value());
    CHECK_FALSE(summary.find(0, 0, SummaryStat::b_hat)->reference.has_value());
    CHECK(summary.within_mean(1, SummaryStat::b_hat).has_value());
  }

  TEST_CASE("scenario 1 within-block correlations") {
    const auto data = scenario(1, {20, 20, 20}, 50000, 7);
    const auto result = fit(data, ProjectionMethod::pca1, 3);
    for (std::size_t b = 0; b < 3; ++b) {
      CHECK(std::abs(*result.summary.within_mean(b, SummaryStat::b_hat) + 0.0526) < 0.005);
      CHECK(std::abs(*result.summary.within_mean(b, SummaryStat::diff)) < 0.005);
      const auto& c = result.report.c_hat();
      const auto members = data.labels.members(b);
      CHECK(std::abs(testutil::within_block(c, members.front(), members.size()).mean + 1.0 / 19.0) < 0.005);
    }
    CHECK(fit(data, ProjectionMethod::pca1, 2).summary.max_abs_within_diff() > 0.01);
  }

  TEST_CASE("scenario 1 unequal sizes") {
    const auto data = scenario(1, {10, 20, 30}, 50000, 8);
    const auto result = fit(data, ProjectionMethod::pca1, 3);
    const double expected[] = {-0.1111, -0.0526, -0.0345};
    for (std::size_t b = 0; b < 3; ++b) {
      CHECK(std::abs(*result.summary.within_mean(b, SummaryStat::b_hat) - expected[b]) < 0.005);
    }
  }

  TEST_CASE("scenario 2 unequal sizes") {
    const auto data = scenario(2, {10, 20, 30}, 50000, 9);
    const auto result = fit(data, ProjectionMethod::pca2, 2);
    const double expected[] = {-0.0701, -0.0228, -0.0304};
    for (std::size_t b = 0; b < 3; ++b) {
      CHECK(std::abs(*result.summary.within_mean(b, SummaryStat::b_hat) - expected[b]) < 0.005);
    }
  }

  TEST_CASE("sum ratio") {
    CHECK(sum_ratio(Matrix::Identity(4, 4) - Matrix::Constant(4, 4, 0.25)) == doctest::Approx(-1.0));
    CHECK(sum_ratio(Matrix::Identity(3, 3)) == 0.0);
    CHECK_THROWS_AS(sum_ratio(Matrix::Zero(3, 3)), DegenerateError);
    const auto data = scenario(2, {20, 20, 20}, 50000, 10);
    CHECK(std::abs(sum_ratio(fit(data, ProjectionMethod::pca2, 2).report.b_hat()) + 1.0) < 0.01);
  }

  TEST_CASE("limit oracle block case") {
    auto spec = ScenarioSpec::preset(1);
    spec.sizes = {10, 20, 30};
    const auto limit = scenario_limit_spec(spec);
    const auto out = limit_oracle(limit, exact(limit.q()));
    const std::size_t first[] = {0, 10, 30};
    for (std::size_t b = 0; b < 3; ++b) {
      const double target = -1.0 / (static_cast<double>(spec.sizes[b]) - 1.0);
      for (std::size_t i = first[b]; i < first[b] + spec.sizes[b]; ++i) {
        for (std::size_t j = i + 1; j < first[b] + spec.sizes[b]; ++j) {
          REQUIRE(std::abs(out.b_corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - target) < 1e-10);
        }
      }
    }
    CHECK(out.diff.cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("limit oracle matches a dense evaluation") {
    for (const std::vector<std::size_t>& sizes : {std::vector<std::size_t>{20, 20, 20}, {10, 20, 30}}) {
      auto spec = ScenarioSpec::preset(2);
      spec.sizes = sizes;
      const auto limit = scenario_limit_spec(spec);
      const Matrix p = testutil::exact_projector(limit.q());
      const auto out = limit_oracle(limit, exact(limit.q()));
      const Matrix d = limit.d().asDiagonal();
      const Matrix b = dense_limit_corr(d + 4.0 * limit.q().transpose() * limit.sigma() * limit.q(), p);
      const Matrix c = dense_limit_corr(d, p);
      CHECK((out.b_corr - b).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((out.c_corr - c).cwiseAbs().maxCoeff() < 1e-6);
      CHECK(out.diff.cwiseAbs().maxCoeff() < 1e-10);
      const double expected_equal[] = {-0.0420, -0.0193, -0.0420};
      const double expected_unequal[] = {-0.0701, -0.0229, -0.0304};
      std::size_t first = 0;
      for (std::size_t blk = 0; blk < 3; ++blk) {
        const double want = sizes[0] == 20 ? expected_equal[blk] : expected_unequal[blk];
        CHECK(std::abs(testutil::within_block(b, first, sizes[blk]).mean - want) < 5e-4);
        first += sizes[blk];
      }
    }
  }

  TEST_CASE("limit oracle without projection") {
    auto spec = ScenarioSpec::preset(2);
    const auto limit = scenario_limit_spec(spec);
    const auto out = limit_oracle(limit, zero_projector(60));
    Matrix expected = 4.0 * limit.q().transpose() * limit.sigma() * limit.q();
    expected.diagonal() += limit.d();
    CHECK((out.b_cov - expected).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("homogeneity bound") {
    const auto data = scenario(1, {20, 20, 20}, 50000, 7);
    const auto result = fit(data, ProjectionMethod::pca1, 3);
    const auto check = homogeneity_bound_check(result.report, 0);
    CHECK(check.passed);
    CHECK(std::abs(check.margin) < 0.005);
    CHECK(check.bound == doctest::Approx(-1.0 / 19.0));

    Matrix forced = Matrix::Constant(50, 50, -0.1);
    forced.diagonal().setOnes();
    const CorrelationReport report(forced, forced, BoolMatrix::Constant(50, 50, false), PopulationLabels::single(50));
    const auto bad = homogeneity_bound_check(report, 0);
    CHECK_FALSE(bad.passed);
    CHECK(bad.margin < 0.0);
  }

  TEST_CASE("exact projector drives the difference to zero as m grows") {
    int inversions = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      double previous = 1e300;
      for (const std::size_t m : {10000u, 30000u, 100000u}) {
        const auto data = scenario(1, {20, 20, 20}, m, 100 + seed);
        const auto result = fit(data, ProjectionMethod::from_q, 3);
        double worst = 0.0;
        for (std::size_t b = 0; b < 3; ++b) {
          const auto* s = result.summary.find(b, b, SummaryStat::diff);
          if (m != 30000u) CHECK(std::abs(s->mean) <= 3.0 * s->sd);
          worst = std::max(worst, std::abs(s->mean));
        }
        if (worst > previous) ++inversions;
        previous = worst;
      }
    }
    CHECK(inversions <= 1);
  }

  TEST_CASE("wrong k' inflates the difference") {
    const auto data = scenario(2, {20, 20, 20}, 50000, 15);
    const double right = fit(data, ProjectionMethod::pca1, 2).report.diff().cwiseAbs().maxCoeff();
    const double wrong = fit(data, ProjectionMethod::pca1, 1).report.diff().cwiseAbs().maxCoeff();
    CHECK(wrong > 10.0 * right);
  }

  TEST_CASE("display order follows the dominant component") {
    const std::vector<std::string> names{"a", "a", "b", "a"};
    const auto labels = PopulationLabels::from_names(names);
    CHECK(display_order(labels) == std::vector<std::size_t>{0, 1, 3, 2});
    Matrix q(2, 4);
    q << 0.6, 0.9, 0.1, 0.7, 0.4, 0.1, 0.9, 0.3;
    CHECK(display_order(labels, &q) == std::vector<std::size_t>{1, 3, 0, 2});
  }
}
