#include "residcorr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "residcorr/config.hpp"
#include "residcorr/errors.hpp"
#include "residcorr/logging.hpp"
#include "residcorr/parallel.hpp"

namespace residcorr {

namespace {

/// Per-SNP generator: fills n genotypes and, when k_truth > 0, k_truth frequencies.
using RowGenerator = std::function<void(std::size_t snp, CounterRng& rng, std::uint8_t* genotypes,
                                        double* frequencies)>;

struct GeneratedRows {
  std::vector<std::uint8_t> data;
  std::vector<std::size_t> kept;
  std::vector<double> f;  // kept x k_truth, row-major
};

GeneratedRows generate_rows(std::size_t m, std::size_t n, std::size_t k_truth, std::uint64_t seed,
                            double maf_threshold, const RowGenerator& row_fn) {
  GeneratedRows out;
  const std::size_t blocks = (m + kSnpBlockSize - 1) / kSnpBlockSize;
  ordered_reduce<GeneratedRows>(
      blocks,
      [&](std::size_t b) {
        GeneratedRows part;
        const std::size_t first = b * kSnpBlockSize;
        const std::size_t rows = std::min(kSnpBlockSize, m - first);
        std::vector<std::uint8_t> row(n);
        std::vector<double> f(k_truth);
        for (std::size_t s = first; s < first + rows; ++s) {
          CounterRng rng(seed, s);
          row_fn(s, rng, row.data(), f.data());
          if (!passes_maf(row, maf_threshold)) continue;
          part.data.insert(part.data.end(), row.begin(), row.end());
          part.kept.push_back(s);
          part.f.insert(part.f.end(), f.begin(), f.end());
        }
        return part;
      },
      [&](GeneratedRows&& part) {
        out.data.insert(out.data.end(), part.data.begin(), part.data.end());
        out.kept.insert(out.kept.end(), part.kept.begin(), part.kept.end());
        out.f.insert(out.f.end(), part.f.begin(), part.f.end());
      });
  if (out.kept.empty()) throw DegenerateError("the MAF filter removed every SNP");
  return out;
}

std::vector<std::string> sample_ids_for(const PopulationLabels& labels) {
  std::vector<std::size_t> seen(labels.num_blocks(), 0);
  std::vector<std::string> ids;
  ids.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t b = labels.block_of(i);
    ids.push_back(labels.names()[b] + "_" + std::to_string(++seen[b]));
  }
  return ids;
}

SimulatedDataset assemble(GeneratedRows&& rows, std::size_t n, std::size_t m_generated,
                          PopulationLabels labels, const Matrix* truth_q) {
  const std::size_t kept = rows.kept.size();
  std::vector<std::string> snp_ids;
  snp_ids.reserve(kept);
  for (const std::size_t s : rows.kept) snp_ids.push_back("snp" + std::to_string(s + 1));
  GenotypeMatrix g(kept, n, std::move(rows.data), std::move(snp_ids), sample_ids_for(labels));
  std::optional<AdmixtureModel> truth;
  if (truth_q != nullptr) {
    const auto k = truth_q->rows();
    Matrix f(static_cast<Eigen::Index>(kept), k);
    for (std::size_t s = 0; s < kept; ++s) {
      for (Eigen::Index j = 0; j < k; ++j) {
        f(static_cast<Eigen::Index>(s), j) = rows.f[s * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)];
      }
    }
    try {
      truth.emplace(*truth_q, std::move(f));
    } catch (const ContractError& e) {
      warn(std::string("ground truth omitted: ") + e.what());
    }
  }
  return {std::move(g), std::move(truth), std::move(labels), std::move(rows.kept), m_generated};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void check_fst(double fst, const char* field) {
  if (!(fst > 0.0 && fst < 1.0)) {
    throw ContractError(std::string(field) + " must lie in (0, 1), got " + fmt(fst));
  }
}

std::size_t expected_sizes(int scenario) {
  switch (scenario) {
    case 1: return 3;
    case 2: return 3;
    case 3: return 1;
    case 4: return 4;
    default: return 7;
  }
}

}  // namespace

double FrequencyPrior::mean() const {
  switch (kind) {
    case Kind::uniform: return 0.5 * (a + b);
    case Kind::beta: return a / (a + b);
    case Kind::constant: return a;
  }
  return a;
}

double FrequencyPrior::variance() const {
  switch (kind) {
    case Kind::uniform: return (b - a) * (b - a) / 12.0;
    case Kind::beta: return a * b / ((a + b) * (a + b) * (a + b + 1.0));
    case Kind::constant: return 0.0;
  }
  return 0.0;
}

double FrequencyPrior::sample(CounterRng& rng) const {
  switch (kind) {
    case Kind::uniform: return a + (b - a) * rng.uniform();
    case Kind::beta: return sample_beta(a, b, rng);
    case Kind::constant: return a;
  }
  return a;
}

std::string FrequencyPrior::describe() const {
  switch (kind) {
    case Kind::uniform: return "Unif(" + fmt(a) + "," + fmt(b) + ")";
    case Kind::beta: return "Beta(" + fmt(a) + "," + fmt(b) + ")";
    case Kind::constant: return "Const(" + fmt(a) + ")";
  }
  return {};
}

ScenarioSpec ScenarioSpec::preset(int scenario) {
  ScenarioSpec spec;
  spec.scenario = scenario;
  switch (scenario) {
    case 1:
    case 2:
      spec.m = 50000;
      spec.sizes = {20, 20, 20};
      spec.prior = FrequencyPrior::uniform(0.0, 1.0);
      break;
    case 3:
      spec.m = 100000;
      spec.sizes = {500};
      spec.prior = FrequencyPrior::uniform(0.01, 0.99);
      spec.maf_threshold = 0.05;
      break;
    case 4:
      spec.m = 1000000;
      spec.sizes = {50, 50, 50, 50};
      spec.prior = FrequencyPrior::beta(0.3, 0.3);
      spec.maf_threshold = 0.05;
      break;
    case 5:
      spec.m = 50000;
      spec.sizes = {20, 20, 10, 10, 10, 10, 10};
      spec.prior = FrequencyPrior::uniform(0.05, 0.95);
      break;
    default:
      throw ContractError("scenario must be one of 1-5, got " + std::to_string(scenario));
  }
  return spec;
}

void ScenarioSpec::validate() const {
  if (scenario < 1 || scenario > 5) {
    throw ContractError("scenario must be one of 1-5, got " + std::to_string(scenario));
  }
  if (m < 1) throw ContractError("m must be at least 1");
  const std::size_t want = expected_sizes(scenario);
  if (sizes.size() != want) {
    throw ContractError("sizes: scenario " + std::to_string(scenario) + " needs " +
                        std::to_string(want) + " population sizes, got " +
                        std::to_string(sizes.size()));
  }
  for (const std::size_t s : sizes) {
    if (s == 0) throw ContractError("sizes must be positive");
  }
  switch (prior.kind) {
    case FrequencyPrior::Kind::uniform:
      if (!(prior.a >= 0.0 && prior.a <= prior.b && prior.b <= 1.0)) {
        throw ContractError("prior: uniform bounds must satisfy 0 <= lo <= hi <= 1");
      }
      break;
    case FrequencyPrior::Kind::beta:
      if (!(prior.a > 0.0 && prior.b > 0.0)) throw ContractError("prior: beta shapes must be positive");
      break;
    case FrequencyPrior::Kind::constant:
      if (!(prior.a >= 0.0 && prior.a <= 1.0)) throw ContractError("prior: constant must lie in [0, 1]");
      break;
  }
  if (!(maf_threshold >= 0.0 && maf_threshold < 0.5)) {
    throw ContractError("maf must lie in [0, 0.5), got " + fmt(maf_threshold));
  }
  if (scenario == 3) {
    check_fst(chain_fst, "chain-fst");
    if (chain_length < 1 || chain_length > sizes[0]) {
      throw ContractError("chain-length must lie in [1, n]");
    }
  }
  if (scenario == 4) {
    check_fst(tree.inner_root, "tree inner-root fst");
    check_fst(tree.inner, "tree inner fst");
    check_fst(tree.pop1, "tree pop1 fst");
    check_fst(tree.ghost, "tree ghost fst");
    check_fst(tree.pop2, "tree pop2 fst");
    check_fst(tree.pop3, "tree pop3 fst");
    if (!(tree.ghost_weight >= 0.0 && tree.pop2_weight >= 0.0 &&
          tree.ghost_weight + tree.pop2_weight <= 1.0 + 1e-12)) {
      throw ContractError("admixture weights must be non-negative and sum to at most 1");
    }
  }
  if (scenario == 5) check_fst(parental_fst, "parental-fst");
}

std::size_t ScenarioSpec::num_individuals() const {
  std::size_t n = 0;
  for (const std::size_t s : sizes) n += s;
  return n;
}

double balding_nichols(double p, double fst, CounterRng& rng) {
  if (fst <= 1e-12 || p <= 0.0 || p >= 1.0) return p;
  const double scale = (1.0 - fst) / fst;
  return sample_beta(p * scale, (1.0 - p) * scale, rng);
}

SimulatedDataset sim_admixture(const Matrix& q, const FrequencyPrior& prior, std::size_t m,
                               std::uint64_t seed, std::optional<PopulationLabels> labels,
                               double maf_threshold) {
  const auto k = static_cast<std::size_t>(q.rows());
  const auto n = static_cast<std::size_t>(q.cols());
  if (k < 1 || n < 1) throw ContractError("Q must be non-empty");
  if (m < 1) throw ContractError("m must be at least 1");
  if (labels && labels->size() != n) throw ContractError("labels do not match the columns of Q");
  // Row-major copy so each individual's proportions are contiguous.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> qt = q.transpose();
  auto rows = generate_rows(m, n, k, seed, maf_threshold,
                            [&](std::size_t, CounterRng& rng, std::uint8_t* g, double* f) {
                              for (std::size_t j = 0; j < k; ++j) f[j] = prior.sample(rng);
                              for (std::size_t i = 0; i < n; ++i) {
                                double pi = 0.0;
                                for (std::size_t j = 0; j < k; ++j) pi += qt(i, j) * f[j];
                                if (pi < -1e-12 || pi > 1.0 + 1e-12) {
                                  throw ContractError("Pi = FQ left [0, 1]; Q is not a sub-convex combination");
                                }
                                g[i] = static_cast<std::uint8_t>(sample_binomial2(std::clamp(pi, 0.0, 1.0), rng));
                              }
                            });
  return assemble(std::move(rows), n, m, labels ? std::move(*labels) : PopulationLabels::single(n),
                  &q);
}

SimulatedDataset sim_spatial_chain(const ScenarioSpec& spec) {
  spec.validate();
  if (spec.scenario != 3) throw ContractError("sim_spatial_chain needs scenario 3");
  const std::size_t n = spec.sizes[0];
  const std::size_t chain = spec.chain_length;
  const PopulationLabels labels = scenario_labels(spec);
  const std::vector<std::size_t>& deme = labels.assignment();
  const std::size_t middle = chain / 2;
  auto rows = generate_rows(spec.m, n, 0, spec.seed, spec.maf_threshold,
                            [&](std::size_t, CounterRng& rng, std::uint8_t* g, double*) {
                              std::vector<double> f(chain);
                              f[middle] = spec.prior.sample(rng);
                              for (std::size_t d = middle + 1; d < chain; ++d) {
                                f[d] = balding_nichols(f[d - 1], spec.chain_fst, rng);
                              }
                              for (std::size_t d = middle; d-- > 0;) {
                                f[d] = balding_nichols(f[d + 1], spec.chain_fst, rng);
                              }
                              for (std::size_t i = 0; i < n; ++i) {
                                g[i] = static_cast<std::uint8_t>(sample_binomial2(f[deme[i]], rng));
                              }
                            });
  return assemble(std::move(rows), n, spec.m, labels, nullptr);
}

SimulatedDataset sim_tree_ghost(const ScenarioSpec& spec) {
  spec.validate();
  if (spec.scenario != 4) throw ContractError("sim_tree_ghost needs scenario 4");
  const std::size_t n = spec.num_individuals();
  const PopulationLabels labels = scenario_labels(spec);
  const Matrix q = scenario_q(spec);
  const std::vector<std::size_t>& pop = labels.assignment();
  const TreeParams& t = spec.tree;
  auto rows = generate_rows(spec.m, n, 4, spec.seed, spec.maf_threshold,
                            [&](std::size_t, CounterRng& rng, std::uint8_t* g, double* f) {
                              const double root = spec.prior.sample(rng);
                              const double upper = balding_nichols(root, t.inner_root, rng);
                              const double lower = balding_nichols(upper, t.inner, rng);
                              const double pop1 = balding_nichols(lower, t.pop1, rng);
                              const double ghost = balding_nichols(lower, t.ghost, rng);
                              const double pop2 = balding_nichols(upper, t.pop2, rng);
                              const double pop3 = balding_nichols(root, t.pop3, rng);
                              f[0] = pop1;
                              f[1] = pop2;
                              f[2] = pop3;
                              f[3] = ghost;
                              const double pi[4] = {pop1, pop2, pop3,
                                                    t.ghost_weight * ghost + t.pop2_weight * pop2};
                              for (std::size_t i = 0; i < n; ++i) {
                                g[i] = static_cast<std::uint8_t>(sample_binomial2(pi[pop[i]], rng));
                              }
                            });
  return assemble(std::move(rows), n, spec.m, labels, &q);
}

SimulatedDataset sim_backcross(const ScenarioSpec& spec) {
  spec.validate();
  if (spec.scenario != 5) throw ContractError("sim_backcross needs scenario 5");
  const std::size_t n = spec.num_individuals();
  const PopulationLabels labels = scenario_labels(spec);
  const std::vector<std::size_t>& cls = labels.assignment();
  auto rows = generate_rows(
      spec.m, n, 0, spec.seed, spec.maf_threshold,
      [&](std::size_t, CounterRng& rng, std::uint8_t* g, double*) {
        const double anc = spec.prior.sample(rng);
        const double f1 = balding_nichols(anc, spec.parental_fst, rng);
        const double f2 = balding_nichols(anc, spec.parental_fst, rng);
        const int founder[2] = {sample_bernoulli(f2, rng), sample_bernoulli(f2, rng)};
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t c = cls[i];
          if (c < 2) {
            const double f = c == 0 ? f1 : f2;
            g[i] = static_cast<std::uint8_t>(sample_bernoulli(f, rng) + sample_bernoulli(f, rng));
            continue;
          }
          // Hybrid of generation c - 2 (0 = F1): the non-pop1 haplotype is passed
          // down one generation at a time with a fresh pop1 partner each time.
          int carried = spec.shared_founder ? founder[rng.uniform() < 0.5 ? 0 : 1]
                                            : sample_bernoulli(f2, rng);
          int partner = sample_bernoulli(f1, rng);
          for (std::size_t gen = 0; gen < c - 2; ++gen) {
            carried = rng.uniform() < 0.5 ? partner : carried;
            partner = sample_bernoulli(f1, rng);
          }
          g[i] = static_cast<std::uint8_t>(carried + partner);
        }
      });
  return assemble(std::move(rows), n, spec.m, labels, nullptr);
}

SimulatedDataset simulate(const ScenarioSpec& spec) {
  spec.validate();
  switch (spec.scenario) {
    case 1:
    case 2:
      return sim_admixture(scenario_q(spec), spec.prior, spec.m, spec.seed, scenario_labels(spec),
                           spec.maf_threshold);
    case 3: return sim_spatial_chain(spec);
    case 4: return sim_tree_ghost(spec);
    default: return sim_backcross(spec);
  }
}

Matrix scenario_q(const ScenarioSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.num_individuals());
  const auto& s = spec.sizes;
  Eigen::Index at = 0;
  auto fill = [&](Matrix& q, std::size_t block, std::initializer_list<double> column) {
    for (Eigen::Index i = at; i < at + static_cast<Eigen::Index>(s[block]); ++i) {
      Eigen::Index j = 0;
      for (const double v : column) q(j++, i) = v;
    }
    at += static_cast<Eigen::Index>(s[block]);
  };
  switch (spec.scenario) {
    case 1: {
      Matrix q(3, n);
      fill(q, 0, {1, 0, 0});
      fill(q, 1, {0, 1, 0});
      fill(q, 2, {0, 0, 1});
      return q;
    }
    case 2: {
      Matrix q(2, n);
      fill(q, 0, {1, 0});
      fill(q, 1, {0.5, 0.5});
      fill(q, 2, {0, 1});
      return q;
    }
    case 4: {
      Matrix q(4, n);
      fill(q, 0, {1, 0, 0, 0});
      fill(q, 1, {0, 1, 0, 0});
      fill(q, 2, {0, 0, 1, 0});
      fill(q, 3, {0, spec.tree.pop2_weight, 0, spec.tree.ghost_weight});
      return q;
    }
    default:
      throw ContractError("scenario " + std::to_string(spec.scenario) + " has no finite Q");
  }
}

PopulationLabels scenario_labels(const ScenarioSpec& spec) {
  spec.validate();
  switch (spec.scenario) {
    case 1: return PopulationLabels::from_sizes(spec.sizes, {"pop1", "pop2", "pop3"});
    case 2: return PopulationLabels::from_sizes(spec.sizes, {"pop1", "admixed", "pop2"});
    case 3: {
      const std::size_t n = spec.sizes[0];
      const std::size_t chain = spec.chain_length;
      const int width = static_cast<int>(std::to_string(chain).size());
      std::vector<std::string> names;
      for (std::size_t d = 0; d < chain; ++d) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "deme%0*zu", width, d + 1);
        names.emplace_back(buf);
      }
      std::vector<std::size_t> assignment(n);
      for (std::size_t i = 0; i < n; ++i) assignment[i] = i * chain / n;
      return PopulationLabels(std::move(assignment), std::move(names));
    }
    case 4: return PopulationLabels::from_sizes(spec.sizes, {"pop1", "pop2", "pop3", "pop4"});
    default:
      return PopulationLabels::from_sizes(spec.sizes,
                                          {"pop1", "pop2", "F1", "BC1", "BC2", "BC3", "BC4"});
  }
}

LimitSpec scenario_limit_spec(const ScenarioSpec& spec) {
  if (spec.scenario != 1 && spec.scenario != 2) {
    throw ContractError("the large-m limit is only available for scenarios 1 and 2");
  }
  Matrix q = scenario_q(spec);
  const auto k = q.rows();
  Vector mu = Vector::Constant(k, spec.prior.mean());
  Matrix sigma = spec.prior.variance() * Matrix::Identity(k, k);
  return LimitSpec::from_prior(std::move(q), std::move(mu), std::move(sigma));
}

bool passes_maf(std::span<const std::uint8_t> row, double threshold) {
  if (threshold <= 0.0) return true;
  std::size_t sum = 0;
  for (const std::uint8_t v : row) sum += v;
  const double p = static_cast<double>(sum) / (2.0 * static_cast<double>(row.size()));
  return std::min(p, 1.0 - p) >= threshold;
}

MafFiltered maf_filter(const GenotypeMatrix& g, double threshold) {
  if (!(threshold >= 0.0 && threshold < 0.5)) {
    throw ContractError("MAF threshold must lie in [0, 0.5)");
  }
  std::vector<std::size_t> kept;
  for (std::size_t s = 0; s < g.num_snps(); ++s) {
    if (passes_maf(g.row(s), threshold)) kept.push_back(s);
  }
  if (kept.empty()) throw DegenerateError("the MAF filter removed every SNP");
  return {g.select_snps(kept), std::move(kept)};
}

}  // namespace residcorr
