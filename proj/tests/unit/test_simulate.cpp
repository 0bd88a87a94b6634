#include <doctest.h>

#include <array>
#include <cmath>

#include "helpers.hpp"
#include "residcorr/errors.hpp"
#include "residcorr/logging.hpp"
#include "residcorr/parallel.hpp"
#include "residcorr/pipeline.hpp"
#include "residcorr/rng.hpp"
#include "residcorr/simulate.hpp"

using namespace residcorr;

namespace {

double max_within_diff(const SimulatedDataset& data, ProjectionMethod method, std::size_t k) {
  FitSession session(data.genotypes);
  FitRequest request;
  request.method = method;
  request.k_prime = k;
  return session.fit(request, data.labels).summary.max_abs_within_diff();
}

struct SilenceWarnings {
  WarningHandler previous = set_warning_handler([](const std::string&) {});
  ~SilenceWarnings() { set_warning_handler(previous); }
};

}  // namespace

TEST_SUITE("simulate") {
  TEST_CASE("Philox known answers") {
    using Block = std::array<std::uint32_t, 4>;
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  }

  TEST_CASE("streams are reproducible and distinct") {
    CounterRng a(42, 7);
    CounterRng b(42, 7);
    CounterRng c(42, 8);
    bool differ = false;
    for (int i = 0; i < 100; ++i) {
      const auto x = a();
      CHECK(x == b());
      differ = differ || x != c();
    }
    CHECK(differ);
    CounterRng u(1, 0);
    for (int i = 0; i < 1000; ++i) {
      const double v = u.uniform();
      REQUIRE(v >= 0.0);
      REQUIRE(v < 1.0);
    }
  }

  TEST_CASE("Balding-Nichols guards") {
    CounterRng rng(1, 1);
    CHECK(balding_nichols(0.5, 1e-13, rng) == 0.5);
    CHECK(balding_nichols(0.0, 0.3, rng) == 0.0);
    CHECK(balding_nichols(1.0, 0.3, rng) == 1.0);
  }

  TEST_CASE("Balding-Nichols moments") {
    double sum = 0.0;
    double sq = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      CounterRng rng(9, static_cast<std::uint64_t>(i));
      const double x = balding_nichols(0.5, 0.3, rng);
      sum += x;
      sq += x * x;
    }
    const double mean = sum / draws;
    const double var = (sq - draws * mean * mean) / (draws - 1);
    CHECK(std::abs(mean - 0.5) < 0.005);
    CHECK(std::abs(var - 0.075) < 0.005);
  }

  TEST_CASE("beta draws with small shapes stay in range") {
    CounterRng rng(3, 3);
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
      const double x = sample_beta(0.03, 0.03, rng);
      REQUIRE(x >= 0.0);
      REQUIRE(x <= 1.0);
      sum += x;
    }
    CHECK(std::abs(sum / 20000 - 0.5) < 0.02);
  }

  TEST_CASE("binomial genotypes pass a chi-square test") {
    for (const double p : {0.1, 0.5, 0.9}) {
      std::array<double, 3> counts{};
      const int draws = 100000;
      CounterRng rng(77, static_cast<std::uint64_t>(p * 10));
      for (int i = 0; i < draws; ++i) counts[static_cast<std::size_t>(sample_binomial2(p, rng))] += 1.0;
      const std::array<double, 3> expected{draws * (1 - p) * (1 - p), draws * 2 * p * (1 - p), draws * p * p};
      double chi2 = 0.0;
      for (std::size_t j = 0; j < 3; ++j) chi2 += (counts[j] - expected[j]) * (counts[j] - expected[j]) / expected[j];
      CHECK(chi2 < 13.816);
    }
  }

  TEST_CASE("degenerate prior gives homozygotes") {
    const auto data = sim_admixture(Matrix::Ones(1, 2), FrequencyPrior::constant(1.0), 10, 1);
    for (const auto v : data.genotypes.data()) CHECK(v == 2);
  }

  TEST_CASE("proportions that leave the unit interval are rejected") {
    CHECK_THROWS_AS(sim_admixture(Matrix::Constant(1, 3, 2.0), FrequencyPrior::uniform(0.5, 1.0), 10, 1),
                    ContractError);
  }

  TEST_CASE("truth frequencies stay in range") {
    auto spec = ScenarioSpec::preset(2);
    spec.m = 2000;
    const auto data = simulate(spec);
    REQUIRE(data.truth.has_value());
    const Matrix pi = data.truth->pi_rows(0, data.genotypes.num_snps());
    CHECK(pi.minCoeff() >= 0.0);
    CHECK(pi.maxCoeff() <= 1.0);
  }

  TEST_CASE("scenario 2 heterozygosity") {
    auto spec = ScenarioSpec::preset(2);
    spec.seed = 5;
    const auto data = simulate(spec);
    FitSession session(data.genotypes);
    const Vector d = heterozygosity_diag(session.stats()).values();
    for (Eigen::Index i = 0; i < 60; ++i) {
      const double expected = (i >= 20 && i < 40) ? 5.0 / 12.0 : 1.0 / 3.0;
      REQUIRE(std::abs(d(i) - expected) < 0.01);
    }
  }

  TEST_CASE("per-individual allele frequency matches the prior mean") {
    for (const int id : {1, 2}) {
      auto spec = ScenarioSpec::preset(id);
      spec.m = 10000;
      spec.seed = 17;
      const auto data = simulate(spec);
      const Vector expected = scenario_limit_spec(spec).q().transpose() * Vector::Constant(3, 0.5);
      const Matrix x = testutil::as_matrix(data.genotypes) / 2.0;
      for (Eigen::Index i = 0; i < x.cols(); ++i) {
        const double mean = x.col(i).mean();
        const double sd = std::sqrt((x.col(i).array() - mean).square().sum() / (x.rows() - 1.0));
        CHECK(std::abs(mean - expected(i)) <= 3.0 * sd / std::sqrt(static_cast<double>(x.rows())));
      }
    }
  }

  TEST_CASE("identical output for any thread count") {
    for (const int id : {1, 3, 4, 5}) {
      auto spec = ScenarioSpec::preset(id);
      spec.m = 20000;
      if (id == 3) spec.sizes = {100};
      if (id == 3) spec.chain_length = 20;
      spec.seed = 99;
      const std::size_t before = num_threads();
      std::vector<SimulatedDataset> runs;
      SilenceWarnings quiet;
      for (const std::size_t t : {1u, 4u, 8u}) {
        set_num_threads(t);
        runs.push_back(simulate(spec));
      }
      set_num_threads(before);
      CHECK(runs[0].genotypes == runs[1].genotypes);
      CHECK(runs[0].genotypes == runs[2].genotypes);
      CHECK(runs[0].kept_snp_indices == runs[2].kept_snp_indices);
    }
  }

  TEST_CASE("seed changes the data") {
    auto spec = ScenarioSpec::preset(1);
    spec.m = 100;
    auto other = spec;
    other.seed = 2;
    CHECK_FALSE(simulate(spec).genotypes == simulate(other).genotypes);
  }

  TEST_CASE("spec validation names the field") {
    auto spec = ScenarioSpec::preset(1);
    spec.sizes = {20};
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("sizes"), ContractError);
    spec = ScenarioSpec::preset(1);
    spec.maf_threshold = 0.5;
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("maf"), ContractError);
    spec = ScenarioSpec::preset(3);
    spec.chain_fst = 1.0;
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("chain-fst"), ContractError);
    spec = ScenarioSpec::preset(4);
    spec.tree.ghost_weight = 0.5;
    CHECK_THROWS_AS(spec.validate(), ContractError);
    CHECK_THROWS_AS(ScenarioSpec::preset(6), ContractError);
  }

  TEST_CASE("MAF filter") {
    const auto g = testutil::random_genotypes(30, 10, 4);
    CHECK(maf_filter(g, 0.0).genotypes == g);
    std::vector<int> values(100, 0);
    CHECK_FALSE(passes_maf(std::vector<std::uint8_t>(100, 0), 0.05));
    std::vector<std::uint8_t> row(100, 0);
    for (int i = 0; i < 10; ++i) row[static_cast<std::size_t>(i)] = 2;
    row[10] = 1;
    CHECK(passes_maf(row, 0.05));
    CHECK(passes_maf(row, 0.105));
    CHECK_FALSE(passes_maf(row, 0.11));
    const auto zeros = testutil::genotypes(1, 100, values);
    CHECK_THROWS_AS(maf_filter(zeros, 0.05), DegenerateError);
    std::vector<int> mixed(200, 0);
    for (int i = 0; i < 21; ++i) mixed[static_cast<std::size_t>(100 + i / 2)] += 1;
    const auto filtered = maf_filter(testutil::genotypes(2, 100, mixed), 0.05);
    CHECK(filtered.kept == std::vector<std::size_t>{1});
  }

  TEST_CASE("chain of one deme is a single population") {
    auto spec = ScenarioSpec::preset(3);
    spec.sizes = {40};
    spec.chain_length = 1;
    spec.m = 2000;
    const auto data = simulate(spec);
    CHECK(data.labels.num_blocks() == 1);
    CHECK_FALSE(data.truth.has_value());
  }

  TEST_CASE("chain without drift behaves as one population") {
    auto spec = ScenarioSpec::preset(3);
    spec.sizes = {100};
    spec.chain_length = 10;
    spec.chain_fst = 1e-13;
    spec.m = 20000;
    const auto data = simulate(spec);
    const auto one = PopulationLabels::single(100);
    FitSession session(data.genotypes);
    FitRequest request{ProjectionMethod::pca2, 2, nullptr, nullptr};
    const auto result = session.fit(request, one);
    CHECK(std::abs(*result.summary.within_mean(0, SummaryStat::b_hat) + 1.0 / 99.0) < 0.002);
    CHECK(max_within_diff(data, ProjectionMethod::pca2, 2) < 0.01);
  }

  TEST_CASE("tree without drift gives identical populations") {
    SilenceWarnings quiet;
    auto spec = ScenarioSpec::preset(4);
    spec.m = 20000;
    spec.sizes = {20, 20, 20, 20};
    spec.tree = {1e-13, 1e-13, 1e-13, 1e-13, 1e-13, 1e-13, 0.3, 0.7};
    const auto data = simulate(spec);
    CHECK_FALSE(data.truth.has_value());
    CHECK(max_within_diff(data, ProjectionMethod::pca2, 2) < 0.01);
  }

  TEST_CASE("tree with a pure ghost sample") {
    auto spec = ScenarioSpec::preset(4);
    spec.m = 100000;
    spec.tree.ghost_weight = 1.0;
    spec.tree.pop2_weight = 0.0;
    const auto data = simulate(spec);
    REQUIRE(data.truth.has_value());
    const Matrix q = scenario_q(spec);
    CHECK(q(3, 199) == 1.0);
    CHECK(q(1, 199) == 0.0);
    CHECK(max_within_diff(data, ProjectionMethod::pca1, 4) < 0.006);
  }

  TEST_CASE("backcross without drift shows no structure") {
    auto spec = ScenarioSpec::preset(5);
    spec.parental_fst = 1e-13;
    spec.shared_founder = false;
    const auto data = simulate(spec);
    CHECK(data.genotypes.num_individuals() == 90);
    CHECK(data.labels.names() == std::vector<std::string>{"pop1", "pop2", "F1", "BC1", "BC2", "BC3", "BC4"});
    CHECK(max_within_diff(data, ProjectionMethod::pca1, 1) < 0.01);
  }

  TEST_CASE("backcross misfit at k' = 2") {
    auto spec = ScenarioSpec::preset(5);
    const auto data = simulate(spec);
    FitSession session(data.genotypes);
    FitRequest request{ProjectionMethod::pca1, 2, nullptr, nullptr};
    const auto summary = session.fit(request, data.labels).summary;
    const double parental = std::max(std::abs(*summary.within_mean(0, SummaryStat::diff)),
                                     std::abs(*summary.within_mean(1, SummaryStat::diff)));
    CHECK(parental > 0.01);
  }
}
