#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "helpers.hpp"
#include "residcorr/errors.hpp"
#include "residcorr/estimators.hpp"
#include "residcorr/logging.hpp"
#include "residcorr/parallel.hpp"
#include "residcorr/simulate.hpp"
#include "residcorr/spectral.hpp"

using namespace residcorr;

namespace {

SimulatedDataset scenario(int id, std::vector<std::size_t> sizes, std::size_t m, std::uint64_t seed) {
  auto spec = ScenarioSpec::preset(id);
  spec.sizes = std::move(sizes);
  spec.m = m;
  spec.seed = seed;
  return simulate(spec);
}

ProjectionMatrix truth_projector(const SimulatedDataset& data) {
  const Matrix& q = data.truth->q();
  return ProjectionMatrix(testutil::exact_projector(q), static_cast<std::size_t>(q.rows()), ProjectionMethod::exact);
}

/// Every SNP has mean 1 and population variance 1.
GenotypeMatrix unit_variance_genotypes(std::size_t m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> data;
  std::vector<std::uint8_t> row(n, 0);
  std::fill(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(n / 2), 2);
  for (std::size_t s = 0; s < m; ++s) {
    std::shuffle(row.begin(), row.end(), rng);
    data.insert(data.end(), row.begin(), row.end());
  }
  return GenotypeMatrix(m, n, std::move(data));
}

struct CaptureWarnings {
  std::vector<std::string> messages;
  WarningHandler previous;
  CaptureWarnings() {
    previous = set_warning_handler([this](const std::string& m) { messages.push_back(m); });
  }
  ~CaptureWarnings() { set_warning_handler(previous); }
};

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("heterozygosity of constant columns") {
    const auto g = testutil::genotypes(3, 3, {1, 0, 2, 1, 0, 2, 1, 0, 2});
    const auto d = heterozygosity_diag(g);
    CHECK(d.values()(0) == 1.0);
    CHECK(d.values()(1) == 0.0);
    CHECK(d.values()(2) == 0.0);
  }

  TEST_CASE("heterozygosity of binomial genotypes") {
    std::mt19937_64 rng(2);
    std::binomial_distribution<int> draw(2, 0.5);
    std::vector<int> values(100000 * 2);
    for (auto& v : values) v = draw(rng);
    const auto d = heterozygosity_diag(testutil::genotypes(100000, 2, values));
    CHECK(std::abs(d.values()(0) - 0.5) < 0.01);
    CHECK(std::abs(d.values()(1) - 0.5) < 0.01);
  }

  TEST_CASE("single individual Gram") {
    CHECK(gram_pca1(testutil::genotypes(4, 1, {2, 2, 2, 2})).matrix()(0, 0) == 4.0);
    CHECK(gram_pca1(testutil::genotypes(4, 1, {1, 1, 1, 1})).matrix()(0, 0) == 0.0);
  }

  TEST_CASE("Gram matrices match dense formulas") {
    const auto g = testutil::random_genotypes(3000, 7, 17);
    const Matrix x = testutil::as_matrix(g);
    const double m = 3000.0;
    const Vector d = (x.array() * (2.0 - x.array())).colwise().sum().transpose() / m;
    const Matrix h = x.transpose() * x / m - Matrix(d.asDiagonal());
    CHECK((gram_pca1(g).matrix() - h).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((heterozygosity_diag(g).values() - d).cwiseAbs().maxCoeff() < 1e-14);
    const Matrix c = Matrix::Identity(7, 7) - Matrix::Constant(7, 7, 1.0 / 7.0);
    const Matrix h1 = c * x.transpose() * x * c / m;
    const auto centered = gram_centered(g);
    CHECK((centered.matrix() - h1).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((centered.matrix() * Vector::Ones(7)).norm() <= 1e-8 * centered.matrix().norm());
    const Vector mean = x.rowwise().mean();
    Matrix g1 = x.colwise() - mean;
    std::vector<Eigen::Index> variable;
    for (Eigen::Index s = 0; s < g1.rows(); ++s) {
      const double sd = std::sqrt(g1.row(s).squaredNorm() / 7.0);
      if (sd > 0.0) {
        g1.row(s) /= sd;
        variable.push_back(s);
      }
    }
    const Matrix kept = g1(variable, Eigen::all);
    const auto standardized = gram_standardized(g);
    CHECK(standardized.gram.m_used() == variable.size());
    CHECK((standardized.gram.matrix() - kept.transpose() * kept / double(variable.size())).cwiseAbs().maxCoeff() <
          1e-10);
  }

  TEST_CASE("block-streamed statistics equal the one-shot ones bit for bit") {
    const auto g = testutil::random_genotypes(3 * kSnpBlockSize + 123, 9, 5);
    MatrixSource source(g);
    const auto stats = accumulate_stats(source);
    CHECK(stats.m == g.num_snps());
    CHECK(gram_pca1(stats).matrix() == gram_pca1(g).matrix());
    const Matrix x = testutil::as_matrix(g);
    CHECK(stats.gtg == Matrix(x.transpose() * x));
    const std::size_t before = num_threads();
    set_num_threads(1);
    const auto one = accumulate_stats(g);
    set_num_threads(4);
    const auto four = accumulate_stats(g);
    set_num_threads(before);
    CHECK(one.gtg == four.gtg);
    CHECK(gram_standardized(g).gram.matrix() == gram_standardized(source).gram.matrix());
  }

  TEST_CASE("PCA 1 recovers the scenario-1 projector") {
    const auto data = scenario(1, {20, 20, 20}, 50000, 7);
    const auto p = project_pca1(data.genotypes, 3);
    CHECK(projection_distance(p, truth_projector(data)) < 0.15);
    CHECK(p.k_prime() == 3);
    CHECK(p.method() == ProjectionMethod::pca1);
  }

  TEST_CASE("PCA 1 edge cases") {
    const auto g = testutil::random_genotypes(500, 6, 3);
    CHECK((project_pca1(g, 6).matrix() - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
    const auto constant = testutil::genotypes(3, 4, std::vector<int>(12, 2));
    CHECK((project_pca1(constant, 1).matrix() - Matrix::Constant(4, 4, 0.25)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(project_pca1(g, 0), ContractError);
    CHECK_THROWS_AS(project_pca1(g, 7), ContractError);
  }

  TEST_CASE("eigenvalue gap warning") {
    CaptureWarnings capture;
    const auto fit = fit_pca1(GramEstimate(Matrix::Identity(4, 4), GramKind::pca1_adjusted, 10), 2);
    CHECK_FALSE(fit.eigen_gap_ok);
    CHECK(capture.messages.size() == 1);
    Matrix h = Matrix::Zero(3, 3);
    h.diagonal() << 3, 2, 1;
    CHECK(fit_pca1(GramEstimate(h, GramKind::pca1_adjusted, 10), 2).eigen_gap_ok);
  }

  TEST_CASE("PCA 2 recovers the scenario-2 projector") {
    const auto data = scenario(2, {20, 20, 20}, 50000, 11);
    const auto p = project_pca2(data.genotypes, 2);
    CHECK(projection_distance(p, truth_projector(data)) < 0.15);
    CHECK(p.contains_ones());
  }

  TEST_CASE("PCA 2 on one population keeps the ones vector") {
    const Matrix q = Matrix::Ones(1, 30);
    const auto data = sim_admixture(q, FrequencyPrior::uniform(0, 1), 20000, 4);
    const auto p = project_pca2(data.genotypes, 2);
    CHECK(p.contains_ones());
    const Matrix rest = p.matrix() - Matrix::Constant(30, 30, 1.0 / 30.0);
    CHECK((rest * Vector::Ones(30)).norm() < 1e-8);
    CHECK(rest.trace() == doctest::Approx(1.0));
  }

  TEST_CASE("PCA 2 treats duplicated individuals alike") {
    const auto data = scenario(1, {10, 10, 10}, 5000, 12);
    std::vector<std::uint8_t> values;
    const std::size_t n = 31;
    for (std::size_t s = 0; s < data.genotypes.num_snps(); ++s) {
      const auto row = data.genotypes.row(s);
      values.insert(values.end(), row.begin(), row.end());
      values.push_back(row[0]);
    }
    const GenotypeMatrix g(data.genotypes.num_snps(), n, std::move(values));
    const Matrix p = project_pca2(g, 3).matrix();
    CHECK((p.row(0) - p.row(30)).cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("PCA 2 rejects k' = 1") {
    CHECK_THROWS_AS(project_pca2(testutil::random_genotypes(100, 5, 1), 1), ContractError);
  }

  TEST_CASE("PCA 3 equals PCA 2 when every SNP has unit variance") {
    const auto g = unit_variance_genotypes(2000, 12, 6);
    CHECK((project_pca3(g, 3).matrix() - project_pca2(g, 3).matrix()).cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("PCA 3 is close to PCA 2 on scenario 2") {
    const auto data = scenario(2, {20, 20, 20}, 50000, 13);
    CHECK(projection_distance(project_pca3(data.genotypes, 2), project_pca2(data.genotypes, 2)) < 0.05);
  }

  TEST_CASE("PCA 3 drops monomorphic SNPs") {
    std::vector<int> values;
    const auto g = testutil::random_genotypes(200, 8, 9);
    for (std::size_t s = 0; s < 200; ++s) {
      for (std::size_t i = 0; i < 8; ++i) values.push_back(s == 50 ? 1 : g(s, i));
    }
    const auto with_constant = testutil::genotypes(200, 8, values);
    const auto standardized = gram_standardized(with_constant);
    CHECK(standardized.gram.m_used() == 199);
    CHECK(standardized.scaling.kept_snps.size() == 199);
    CHECK(std::find(standardized.scaling.kept_snps.begin(), standardized.scaling.kept_snps.end(), 50) ==
          standardized.scaling.kept_snps.end());
    CHECK_NOTHROW(project_pca3(with_constant, 3));
    CHECK_THROWS_AS(project_pca3(testutil::genotypes(2, 3, {1, 1, 1, 0, 0, 0}), 2), DegenerateError);
  }

  TEST_CASE("projection from Q") {
    CHECK((project_from_q(Matrix::Ones(1, 3)).matrix() - Matrix::Constant(3, 3, 1.0 / 3.0)).cwiseAbs().maxCoeff() <
          1e-12);
    Matrix q = Matrix::Zero(2, 4);
    q(0, 0) = q(1, 1) = 1.0;
    Matrix expected = Matrix::Zero(4, 4);
    expected(0, 0) = expected(1, 1) = 1.0;
    CHECK((project_from_q(q).matrix() - expected).cwiseAbs().maxCoeff() < 1e-12);
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix qr = testutil::random_matrix(2, 9, rng, 0.0, 1.0);
      const Matrix r = testutil::random_matrix(2, 2, rng);
      CHECK((project_from_q(qr).matrix() - project_from_q(r * qr).matrix()).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((project_from_q(qr).matrix() - testutil::exact_projector(qr)).cwiseAbs().maxCoeff() < 1e-10);
    }
    Matrix deficient(2, 3);
    deficient << 1, 2, 3, 2, 4, 6;
    CHECK_THROWS_WITH_AS(project_from_q(deficient), doctest::Contains("rank 1"), DegenerateError);
  }

  TEST_CASE("projection from Pi") {
    Matrix q(2, 5);
    q << 1, 0.7, 0.5, 0.2, 0, 0, 0.3, 0.5, 0.8, 1;
    const auto data = sim_admixture(q, FrequencyPrior::uniform(0, 1), 200, 21);
    const Matrix pi = data.truth->pi_rows(0, 200);
    CHECK((project_from_pi(pi, 2).matrix() - project_from_q(q).matrix()).cwiseAbs().maxCoeff() < 1e-8);
    const Matrix first = pi.topRows(2);
    const Matrix second = pi.middleRows(100, 2);
    CHECK((project_from_pi(first, 2).matrix() - project_from_pi(second, 2).matrix()).cwiseAbs().maxCoeff() < 1e-8);
    Matrix proportional(2, 3);
    proportional << 0.1, 0.2, 0.3, 0.2, 0.4, 0.6;
    const Vector v = proportional.row(0).transpose().normalized();
    CHECK((project_from_pi(proportional, 1).matrix() - v * v.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(project_from_pi(proportional, 2), DegenerateError);
  }

  TEST_CASE("project_null is the mean projector") {
    CHECK((project_null(5).matrix() - Matrix::Constant(5, 5, 0.2)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(project_null(5).method() == ProjectionMethod::pca_null);
  }

  TEST_CASE("all estimators return valid projectors on random inputs") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> size(3, 12);
    for (int trial = 0; trial < 100; ++trial) {
      const auto n = static_cast<std::size_t>(size(rng));
      const std::size_t m = 20 + static_cast<std::size_t>(size(rng)) * 5;
      const auto g = testutil::random_genotypes(m, n, 1000 + static_cast<std::uint64_t>(trial));
      const std::size_t k = 2 + static_cast<std::size_t>(trial) % (n - 1);
      const Matrix q = testutil::random_matrix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n), rng, 0, 1);
      const Matrix f = testutil::random_matrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k), rng, 0, 1);
      for (const auto& p : {project_pca1(g, k), project_pca2(g, k), project_pca3(g, k), project_from_q(q),
                            project_from_pi(f * q, k)}) {
        const Matrix& a = p.matrix();
        REQUIRE(max_asymmetry(a) <= 1e-8);
        REQUIRE((a * a - a).cwiseAbs().maxCoeff() <= 1e-8);
        REQUIRE(std::abs(a.trace() - static_cast<double>(k)) <= 1e-6);
      }
    }
  }

  TEST_CASE("heterozygosity is unbiased") {
    Matrix q(2, 15);
    q.setZero();
    for (int i = 0; i < 15; ++i) {
      if (i < 5) q(0, i) = 1.0;
      else if (i < 10) q(0, i) = q(1, i) = 0.5;
      else q(1, i) = 1.0;
    }
    const auto limit = LimitSpec::from_prior(q, Vector::Constant(2, 0.5), Matrix::Identity(2, 2) / 12.0);
    Vector sum = Vector::Zero(15);
    Vector sq = Vector::Zero(15);
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
      const auto data = sim_admixture(q, FrequencyPrior::uniform(0, 1), 2000, 500 + static_cast<std::uint64_t>(r));
      const Vector d = heterozygosity_diag(data.genotypes).values();
      sum += d;
      sq += d.cwiseProduct(d);
    }
    const Vector mean = sum / reps;
    const Vector var = (sq - reps * mean.cwiseProduct(mean)) / (reps - 1);
    for (int i = 0; i < 15; ++i) {
      const double se = std::sqrt(var(i) / reps);
      CHECK(std::abs(mean(i) - limit.d()(i)) <= 3.0 * se);
    }
  }

  TEST_CASE("Gram estimate meets the Frobenius bound") {
    Matrix q = Matrix::Zero(3, 10);
    for (int i = 0; i < 10; ++i) q(i < 4 ? 0 : (i < 7 ? 1 : 2), i) = 1.0;
    const Vector mu = Vector::Constant(3, 0.5);
    const Matrix sigma = Matrix::Identity(3, 3) / 12.0;
    const Matrix h = 4.0 * q.transpose() * (sigma + mu * mu.transpose()) * q;
    for (const std::size_t m : {1000u, 10000u}) {
      double total = 0.0;
      for (int r = 0; r < 100; ++r) {
        const auto data = sim_admixture(q, FrequencyPrior::uniform(0, 1), m, 7000 + static_cast<std::uint64_t>(r));
        total += (gram_pca1(data.genotypes).matrix() - h).squaredNorm();
      }
      CHECK(total / 100.0 <= 16.0 * 100.0 / static_cast<double>(m));
    }
  }
}
