#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "residcorr/core.hpp"
#include "residcorr/rng.hpp"

namespace residcorr {

/// Distribution of ancestral allele frequencies.
struct FrequencyPrior {
  enum class Kind { uniform, beta, constant };
  Kind kind = Kind::uniform;
  double a = 0.0;  // lower bound, first shape, or the constant
  double b = 1.0;  // upper bound or second shape

  static FrequencyPrior uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static FrequencyPrior beta(double shape1, double shape2) { return {Kind::beta, shape1, shape2}; }
  static FrequencyPrior constant(double value) { return {Kind::constant, value, value}; }

  double mean() const;
  double variance() const;
  double sample(CounterRng& rng) const;
  std::string describe() const;
};

/// Branch drifts (Fst) of (((pop1, ghost):inner, pop2):inner_root, pop3) and
/// the admixture weights of pop4.
struct TreeParams {
  double inner_root = 0.1;
  double inner = 0.05;
  double pop1 = 0.1;
  double ghost = 0.2;
  double pop2 = 0.3;
  double pop3 = 0.5;
  double ghost_weight = 0.3;
  double pop2_weight = 0.7;
};

struct ScenarioSpec {
  int scenario = 1;
  std::size_t m = 50000;
  std::vector<std::size_t> sizes;
  FrequencyPrior prior;
  // scenario 3
  double chain_fst = 0.001;
  std::size_t chain_length = 100;
  // scenario 4
  TreeParams tree;
  // scenario 5
  double parental_fst = 0.3;
  bool shared_founder = true;
  double maf_threshold = 0.0;
  std::uint64_t seed = 1;

  /// Defaults for scenarios 1-5 at desk scale.
  static ScenarioSpec preset(int scenario);
  /// Throws ContractError naming the offending field.
  void validate() const;
  std::size_t num_individuals() const;
};

struct SimulatedDataset {
  GenotypeMatrix genotypes;
  /// Ground truth restricted to the kept SNPs (scenarios 1, 2, 4).
  std::optional<AdmixtureModel> truth;
  PopulationLabels labels;
  std::vector<std::size_t> kept_snp_indices;
  std::size_t m_generated = 0;
};

/// Balding-Nichols draw Beta(p(1-fst)/fst, (1-p)(1-fst)/fst).
double balding_nichols(double p, double fst, CounterRng& rng);

/// G ~ Binomial(2, FQ) with the rows of F iid from `prior`.
SimulatedDataset sim_admixture(const Matrix& q, const FrequencyPrior& prior, std::size_t m,
                               std::uint64_t seed, std::optional<PopulationLabels> labels = {},
                               double maf_threshold = 0.0);
SimulatedDataset sim_spatial_chain(const ScenarioSpec& spec);
SimulatedDataset sim_tree_ghost(const ScenarioSpec& spec);
SimulatedDataset sim_backcross(const ScenarioSpec& spec);
/// Dispatches on spec.scenario.
SimulatedDataset simulate(const ScenarioSpec& spec);

/// Admixture proportions of scenarios 1, 2 and 4 (4 is over pop1, pop2, pop3, ghost).
Matrix scenario_q(const ScenarioSpec& spec);
PopulationLabels scenario_labels(const ScenarioSpec& spec);
/// Population quantities for the large-m limit of scenarios 1 and 2.
LimitSpec scenario_limit_spec(const ScenarioSpec& spec);

bool passes_maf(std::span<const std::uint8_t> row, double threshold);

struct MafFiltered {
  GenotypeMatrix genotypes;
  std::vector<std::size_t> kept;
};

/// Keeps SNP s iff min(p, 1 - p) >= threshold, p = sum_i G_si / 2n.
MafFiltered maf_filter(const GenotypeMatrix& g, double threshold);

}  // namespace residcorr
