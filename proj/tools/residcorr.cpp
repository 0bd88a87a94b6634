// residcorr: simulate genotype data, fit projections and emit residual
// correlation reports and figures.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "residcorr/config.hpp"
#include "residcorr/errors.hpp"
#include "residcorr/io.hpp"
#include "residcorr/parallel.hpp"
#include "residcorr/pipeline.hpp"
#include "residcorr/plot.hpp"
#include "residcorr/simulate.hpp"

namespace rc = residcorr;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDegenerate = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string exact(double v) {
  char buf[64];
  const auto end = std::to_chars(buf, buf + sizeof buf, v).ptr;
  return std::string(buf, end);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
  std::vector<T> out;
  for (const auto& item : split(text, ',')) {
    std::istringstream in(item);
    T v{};
    if (!(in >> v) || !in.eof()) throw UsageError(flag + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(flag + " is empty");
  return out;
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += exact(v);
    } else {
      out += std::to_string(v);
    }
  }
  return out;
}

rc::FrequencyPrior parse_prior(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--prior must look like unif:lo,hi, beta:a,b or const:p");
  const std::string kind = text.substr(0, colon);
  const auto values = parse_list<double>(text.substr(colon + 1), "--prior");
  if (kind == "unif" && values.size() == 2) return rc::FrequencyPrior::uniform(values[0], values[1]);
  if (kind == "beta" && values.size() == 2) return rc::FrequencyPrior::beta(values[0], values[1]);
  if (kind == "const" && values.size() == 1) return rc::FrequencyPrior::constant(values[0]);
  throw UsageError("--prior must look like unif:lo,hi, beta:a,b or const:p");
}

std::string prior_flag(const rc::FrequencyPrior& p) {
  switch (p.kind) {
    case rc::FrequencyPrior::Kind::uniform: return "unif:" + exact(p.a) + "," + exact(p.b);
    case rc::FrequencyPrior::Kind::beta: return "beta:" + exact(p.a) + "," + exact(p.b);
    case rc::FrequencyPrior::Kind::constant: return "const:" + exact(p.a);
  }
  return {};
}

rc::Manifest base_manifest(const std::string& command, const std::vector<std::string>& args) {
  rc::Manifest m;
  m["format_version"] = rc::kFormatVersion;
  m["command"] = command;
  m["args"] = args;
  return m;
}

rc::Manifest tolerances_json() {
  using T = rc::Tolerances;
  return {{"symmetry", T::symmetry},           {"idempotency", T::idempotency},
          {"trace", T::trace},                 {"orthonormality", T::orthonormality},
          {"reconstruction", T::reconstruction}, {"gram_schmidt", T::gram_schmidt},
          {"variance_floor", T::variance_floor}, {"correlation_range", T::correlation_range},
          {"eigen_gap", T::eigen_gap}};
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw rc::DataError("cannot write " + path.string());
  out << content;
  if (!out) throw rc::DataError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw rc::DataError("cannot create directory " + dir.string());
}

// ------------------------------------------------------------------ simulate

struct SimulateArgs {
  int scenario = 0;
  std::optional<std::size_t> m;
  std::string sizes;
  std::uint64_t seed = 1;
  std::optional<double> maf;
  std::string prior;
  std::optional<double> chain_fst;
  std::optional<std::size_t> chain_length;
  std::optional<double> parental_fst;
  std::optional<bool> shared_founder;
  std::string tree_fst;
  std::string admix_weights;
  std::string format = "bed";
  std::string out = ".";
};

int run_simulate(const SimulateArgs& a) {
  rc::ScenarioSpec spec;
  try {
    spec = rc::ScenarioSpec::preset(a.scenario);
  } catch (const rc::ContractError& e) {
    throw UsageError(std::string("--scenario: ") + e.what());
  }
  if (a.m) spec.m = *a.m;
  if (!a.sizes.empty()) spec.sizes = parse_list<std::size_t>(a.sizes, "--sizes");
  spec.seed = a.seed;
  if (a.maf) spec.maf_threshold = *a.maf;
  if (!a.prior.empty()) spec.prior = parse_prior(a.prior);
  if (a.chain_fst) spec.chain_fst = *a.chain_fst;
  if (a.chain_length) spec.chain_length = *a.chain_length;
  if (a.parental_fst) spec.parental_fst = *a.parental_fst;
  if (a.shared_founder) spec.shared_founder = *a.shared_founder;
  if (!a.tree_fst.empty()) {
    const auto v = parse_list<double>(a.tree_fst, "--tree-fst");
    if (v.size() != 6) throw UsageError("--tree-fst needs 6 values: inner-root,inner,pop1,ghost,pop2,pop3");
    spec.tree.inner_root = v[0];
    spec.tree.inner = v[1];
    spec.tree.pop1 = v[2];
    spec.tree.ghost = v[3];
    spec.tree.pop2 = v[4];
    spec.tree.pop3 = v[5];
  }
  if (!a.admix_weights.empty()) {
    const auto v = parse_list<double>(a.admix_weights, "--admix-weights");
    if (v.size() != 2) throw UsageError("--admix-weights needs 2 values: ghost,pop2");
    spec.tree.ghost_weight = v[0];
    spec.tree.pop2_weight = v[1];
  }
  try {
    spec.validate();
  } catch (const rc::ContractError& e) {
    throw UsageError(e.what());
  }

  std::vector<std::string> args = {"simulate",  "--scenario", std::to_string(spec.scenario),
                                   "--m",       std::to_string(spec.m),
                                   "--sizes",   join(spec.sizes),
                                   "--seed",    std::to_string(spec.seed),
                                   "--maf",     exact(spec.maf_threshold),
                                   "--prior",   prior_flag(spec.prior)};
  if (spec.scenario == 3) {
    args.insert(args.end(), {"--chain-fst", exact(spec.chain_fst), "--chain-length",
                             std::to_string(spec.chain_length)});
  }
  if (spec.scenario == 4) {
    const auto& t = spec.tree;
    args.insert(args.end(),
                {"--tree-fst", join(std::vector<double>{t.inner_root, t.inner, t.pop1, t.ghost, t.pop2, t.pop3}),
                 "--admix-weights", join(std::vector<double>{t.ghost_weight, t.pop2_weight})});
  }
  if (spec.scenario == 5) {
    args.insert(args.end(), {"--parental-fst", exact(spec.parental_fst), "--shared-founder",
                             spec.shared_founder ? "true" : "false"});
  }
  args.insert(args.end(), {"--format", a.format});

  const rc::SimulatedDataset data = rc::simulate(spec);
  const fs::path out(a.out);
  ensure_dir(out);
  const auto per_individual = data.labels.per_individual();
  if (a.format == "bed") {
    rc::write_bed(data.genotypes, rc::PlinkPaths::from_prefix(out / "genotypes"), per_individual);
  } else {
    rc::write_tsv_genotypes(data.genotypes, out / "genotypes.tsv");
  }
  rc::write_labels(per_individual, out / "labels.txt");
  if (data.truth) {
    rc::write_whitespace_matrix(data.truth->q().transpose(), out / "truth.Q");
    rc::write_whitespace_matrix(data.truth->f(), out / "truth.P");
  }
  rc::Manifest manifest = base_manifest("simulate", args);
  manifest["scenario"] = spec.scenario;
  manifest["seed"] = spec.seed;
  manifest["m_generated"] = data.m_generated;
  manifest["m"] = data.genotypes.num_snps();
  manifest["n"] = data.genotypes.num_individuals();
  manifest["sizes"] = spec.sizes;
  manifest["prior"] = spec.prior.describe();
  manifest["maf_threshold"] = spec.maf_threshold;
  manifest["genotype_format"] = a.format;
  manifest["truth"] = data.truth.has_value();
  rc::write_manifest(manifest, out / "manifest.json");
  return kExitOk;
}

// ------------------------------------------------------------------ fit

struct FitArgs {
  std::string geno;
  std::string method;
  std::optional<std::size_t> k;
  std::string q;
  std::string pi;
  std::string labels;
  std::string missing = "drop_snp";
  std::string out = ".";
};

bool is_tsv(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".tsv") == 0;
}

void write_block_summary(const rc::BlockSummary& summary, const fs::path& path) {
  std::ostringstream out;
  out << "block_a\tblock_b\tstat\tmean\tsd\treference\n";
  for (const auto& s : summary.stats) {
    out << summary.names[s.block_a] << '\t' << summary.names[s.block_b] << '\t' << rc::to_string(s.stat)
        << '\t' << rc::format_number(s.mean) << '\t' << rc::format_number(s.count > 0 ? s.sd : NAN)
        << '\t' << (s.reference ? rc::format_number(*s.reference) : std::string("NA")) << '\n';
  }
  write_text(path, out.str());
}

int run_fit(const FitArgs& a) {
  const int sources = int(!a.method.empty()) + int(!a.q.empty()) + int(!a.pi.empty());
  if (sources == 0) throw UsageError("choose a projection with --method, --q or --pi");
  if (sources > 1) throw UsageError("--method, --q and --pi are mutually exclusive");
  rc::FitRequest request;
  std::optional<rc::Matrix> q_hat;
  std::optional<rc::Matrix> pi_hat;
  if (!a.method.empty()) {
    try {
      request.method = rc::parse_projection_method(a.method);
    } catch (const rc::Error& e) {
      throw UsageError(std::string("--method: ") + e.what());
    }
    switch (request.method) {
      case rc::ProjectionMethod::pca1:
      case rc::ProjectionMethod::pca2:
      case rc::ProjectionMethod::pca3:
        if (!a.k) throw UsageError("--method " + a.method + " needs --k");
        if (request.method != rc::ProjectionMethod::pca1 && *a.k < 2) {
          throw UsageError("--method " + a.method +
                           " needs --k >= 2; use --method pca-null for k' = 1 (only the SNP mean is predicted)");
        }
        request.k_prime = *a.k;
        break;
      case rc::ProjectionMethod::pca_null:
        if (a.k && *a.k != 1) throw UsageError("--method pca-null has k' = 1");
        request.k_prime = 1;
        break;
      default:
        throw UsageError("--method must be pca1, pca2, pca3 or pca-null");
    }
  } else if (!a.q.empty()) {
    q_hat = rc::read_q(a.q);
    request.method = rc::ProjectionMethod::from_q;
    request.k_prime = static_cast<std::size_t>(q_hat->rows());
    if (a.k && *a.k != request.k_prime) {
      throw UsageError("--k " + std::to_string(*a.k) + " conflicts with the " +
                       std::to_string(request.k_prime) + " columns of " + a.q);
    }
    request.q_hat = &*q_hat;
  } else {
    if (!a.k) throw UsageError("--pi needs --k");
    pi_hat = rc::read_whitespace_matrix(a.pi);
    request.method = rc::ProjectionMethod::from_pi;
    request.k_prime = *a.k;
    request.pi_hat = &*pi_hat;
  }
  rc::MissingPolicy policy;
  try {
    policy = rc::parse_missing_policy(a.missing);
  } catch (const rc::Error& e) {
    throw UsageError(std::string("--missing: ") + e.what());
  }

  std::optional<rc::ValidatedGenotypes> tsv;
  std::optional<rc::BedSource> bed;
  std::optional<rc::FitSession> session;
  std::vector<std::string> ids;
  std::vector<std::string> default_labels;
  std::size_t dropped = 0;
  if (is_tsv(a.geno)) {
    tsv.emplace(rc::read_tsv_genotypes(a.geno, policy));
    dropped = tsv->dropped_snps;
    session.emplace(tsv->genotypes);
    for (std::size_t i = 0; i < tsv->genotypes.num_individuals(); ++i) ids.push_back("ind" + std::to_string(i + 1));
    default_labels.assign(ids.size(), "all");
  } else {
    bed.emplace(rc::PlinkPaths::from_prefix(a.geno), policy);
    session.emplace(*bed);
    dropped = bed->dropped_snps();
    for (const auto& r : bed->samples()) {
      ids.push_back(r.sample_id);
      default_labels.push_back(r.family_id);
    }
  }
  if (dropped > 0) std::cerr << "warning: dropped " << dropped << " SNPs with missing genotypes\n";
  const std::vector<std::string> names = a.labels.empty() ? default_labels : rc::read_labels(a.labels);
  if (names.size() != ids.size()) {
    throw rc::DataError("labels list " + std::to_string(names.size()) + " individuals, the genotypes " +
                        std::to_string(ids.size()));
  }
  const auto labels = rc::PopulationLabels::from_names(names);
  if (request.k_prime > ids.size()) {
    throw UsageError("--k " + std::to_string(request.k_prime) + " exceeds n = " + std::to_string(ids.size()));
  }

  rc::FitResult result = session->fit(request, labels);
  if (result.report.undefined_mask().any()) {
    std::cerr << "warning: some correlations are undefined (zero residual variance); written as NA\n";
  }

  const fs::path out(a.out);
  ensure_dir(out);
  const auto& mask = result.report.undefined_mask();
  rc::write_matrix_tsv(result.report.b_hat(), ids, out / "b_hat.tsv", &mask);
  rc::write_matrix_tsv(result.report.c_hat(), ids, out / "c_hat.tsv", &mask);
  rc::write_matrix_tsv(result.report.diff(), ids, out / "diff.tsv", &mask);
  write_block_summary(result.summary, out / "block_summary.tsv");
  rc::write_labels(names, out / "labels.txt");
  if (result.eig) {
    const auto& eig = *result.eig;
    const auto cols = std::min<Eigen::Index>(eig.vectors().cols(), 10);
    std::ostringstream pcs;
    pcs << "id";
    for (Eigen::Index c = 0; c < cols; ++c) pcs << "\tPC" << c + 1;
    pcs << '\n';
    for (std::size_t i = 0; i < ids.size(); ++i) {
      pcs << ids[i];
      for (Eigen::Index c = 0; c < cols; ++c) {
        pcs << '\t' << rc::format_number(eig.vectors()(static_cast<Eigen::Index>(i), c));
      }
      pcs << '\n';
    }
    write_text(out / "pcs.tsv", pcs.str());
    std::ostringstream values;
    values << "index\teigenvalue\n";
    for (Eigen::Index j = 0; j < eig.values().size(); ++j) {
      values << j + 1 << '\t' << rc::format_number(eig.values()(j)) << '\n';
    }
    write_text(out / "eigenvalues.tsv", values.str());
  }

  std::vector<std::string> args = {"fit", "--geno", a.geno};
  if (!a.method.empty()) args.insert(args.end(), {"--method", std::string(rc::to_string(request.method))});
  if (!a.q.empty()) args.insert(args.end(), {"--q", a.q});
  if (!a.pi.empty()) args.insert(args.end(), {"--pi", a.pi});
  if (a.k) args.insert(args.end(), {"--k", std::to_string(*a.k)});
  if (!a.labels.empty()) args.insert(args.end(), {"--labels", a.labels});
  args.insert(args.end(), {"--missing", std::string(rc::to_string(policy))});
  rc::Manifest manifest = base_manifest("fit", args);
  manifest["method"] = std::string(rc::to_string(request.method));
  manifest["k_prime"] = request.k_prime;
  manifest["m"] = result.m;
  manifest["n"] = ids.size();
  manifest["seed"] = nullptr;
  const fs::path source_manifest = fs::path(a.geno).parent_path() / "manifest.json";
  if (fs::is_regular_file(source_manifest)) {
    const rc::Manifest source = rc::read_manifest(source_manifest);
    if (source.contains("seed")) manifest["seed"] = source["seed"];
  }
  manifest["dropped_snps"] = dropped;
  manifest["eigen_gap_ok"] = result.eigen_gap_ok;
  manifest["max_abs_within_diff"] = result.summary.max_abs_within_diff();
  manifest["tolerances"] = tolerances_json();
  rc::write_manifest(manifest, out / "manifest.json");
  return kExitOk;
}

// ------------------------------------------------------------------ plot

struct PlotArgs {
  std::string in;
  std::string out;
  std::string pcs;
};

rc::PopulationLabels labels_from_dir(const fs::path& dir) {
  const auto names = rc::read_labels(dir / "labels.txt");
  return rc::PopulationLabels::from_names(names);
}

fs::path require(const fs::path& path) {
  if (!fs::exists(path)) throw rc::DataError("missing input " + path.string());
  return path;
}

rc::Manifest plot_manifest(const std::string& kind, const PlotArgs& a) {
  std::vector<std::string> args = {"plot", kind, "--in", a.in};
  if (!a.pcs.empty()) args.insert(args.end(), {"--pcs", a.pcs});
  return base_manifest("plot", args);
}

void finish_plot(const std::string& kind, const PlotArgs& a, const std::string& svg) {
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_text(out, svg);
  rc::write_manifest(plot_manifest(kind, a), fs::path(a.out + ".manifest.json"));
}

int run_heatmap(const PlotArgs& a) {
  const fs::path dir(a.in);
  const auto b = rc::read_matrix_tsv(require(dir / "b_hat.tsv"));
  const auto d = rc::read_matrix_tsv(require(dir / "diff.tsv"));
  const auto labels = labels_from_dir(dir);
  if (b.ids.size() != labels.size() || d.ids.size() != labels.size()) {
    throw rc::DataError("b_hat.tsv, diff.tsv and labels.txt disagree on n");
  }
  const auto order = rc::display_order(labels);
  rc::HeatmapSpec spec;
  spec.upper = rc::permute_symmetric(b.values, order);
  spec.lower = rc::permute_symmetric(d.values, order);
  spec.missing = rc::permute_symmetric(rc::BoolMatrix(b.missing.array() || d.missing.array()), order);
  spec.block_names = labels.names();
  spec.block_sizes = labels.block_sizes();
  finish_plot("heatmap", a, rc::heatmap_svg(spec));
  return kExitOk;
}

int run_scatter(const PlotArgs& a) {
  const fs::path dir(a.in);
  const auto pcs = rc::read_matrix_tsv(require(dir / "pcs.tsv"));
  const auto manifest = rc::read_manifest(require(dir / "manifest.json"));
  const auto labels = labels_from_dir(dir);
  if (pcs.ids.size() != labels.size()) throw rc::DataError("pcs.tsv and labels.txt disagree on n");
  std::size_t x = 1;
  std::size_t y = 2;
  if (!a.pcs.empty()) {
    const auto v = parse_list<std::size_t>(a.pcs, "--pcs");
    if (v.size() != 2 || v[0] < 1 || v[1] < 1) throw UsageError("--pcs needs two 1-based components");
    x = v[0];
    y = v[1];
  } else if (manifest.value("method", "") == "pca1" && manifest.value("k_prime", 0) >= 3) {
    x = 2;
    y = 3;
  }
  const auto cols = static_cast<std::size_t>(pcs.values.cols());
  if (x > cols || y > cols) throw UsageError("--pcs: pcs.tsv holds " + std::to_string(cols) + " components");
  finish_plot("scatter", a,
              rc::scatter_svg(pcs.values, x - 1, y - 1, labels, "PC" + std::to_string(x),
                              "PC" + std::to_string(y)));
  return kExitOk;
}

int run_scree(const PlotArgs& a) {
  const fs::path dir(a.in);
  const auto manifest = rc::read_manifest(require(dir / "manifest.json"));
  std::ifstream in(require(dir / "eigenvalues.tsv"));
  std::string line;
  std::getline(in, line);
  std::vector<double> values;
  while (std::getline(in, line)) {
    const auto f = split(line, '\t');
    if (f.size() != 2) throw rc::DataError("eigenvalues.tsv: malformed line");
    values.push_back(std::stod(f[1]));
  }
  const bool drop_first = manifest.value("method", "") == "pca1";
  if (drop_first && !values.empty()) values.erase(values.begin());
  if (values.empty()) throw rc::DataError("eigenvalues.tsv holds no eigenvalues to draw");
  const rc::Vector v = Eigen::Map<const rc::Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  finish_plot("scree", a, rc::scree_svg(v, drop_first ? 2 : 1));
  return kExitOk;
}

// ------------------------------------------------------------------ entry

int run(std::vector<std::string> argv);

int run_replay(const std::string& manifest_path, const std::string& out) {
  const auto manifest = rc::read_manifest(manifest_path);
  if (!manifest.contains("args") || !manifest["args"].is_array()) {
    throw rc::DataError(manifest_path + " does not record a command");
  }
  std::vector<std::string> args = manifest["args"].get<std::vector<std::string>>();
  args.insert(args.end(), {"--out", out});
  return run(args);
}

int run(std::vector<std::string> argv) {
  CLI::App app{"Residual correlation diagnostics for admixture and PCA fits", "residcorr"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults; flags win");
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->envname("RESIDCORR_THREADS");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate one of the five scenarios");
  simulate->add_option("--scenario", sim.scenario, "Scenario 1-5")->required();
  simulate->add_option("--m", sim.m, "Number of SNPs before the MAF filter");
  simulate->add_option("--sizes", sim.sizes, "Comma-separated population sizes")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::Join);
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--maf", sim.maf, "Minor allele frequency threshold");
  simulate->add_option("--prior", sim.prior, "unif:lo,hi | beta:a,b | const:p")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::Join);
  simulate->add_option("--chain-fst", sim.chain_fst, "Scenario 3: Fst between adjacent demes");
  simulate->add_option("--chain-length", sim.chain_length, "Scenario 3: number of demes");
  simulate->add_option("--parental-fst", sim.parental_fst, "Scenario 5: parental Fst");
  simulate->add_option("--shared-founder", sim.shared_founder, "Scenario 5: hybrids share one pop2 founder");
  simulate->add_option("--tree-fst", sim.tree_fst, "Scenario 4: inner-root,inner,pop1,ghost,pop2,pop3")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::Join);
  simulate->add_option("--admix-weights", sim.admix_weights, "Scenario 4: ghost,pop2 weights of pop4")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::Join);
  simulate->add_option("--format", sim.format, "Genotype output format")->check(CLI::IsMember({"bed", "tsv"}));
  simulate->add_option("--out", sim.out, "Output directory");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a projection and report residual correlations");
  fit_cmd->add_option("--geno", fit.geno, "PLINK prefix (or .bed) or genotype .tsv")->required();
  fit_cmd->add_option("--method", fit.method, "pca1 | pca2 | pca3 | pca-null");
  fit_cmd->add_option("--k", fit.k, "Number of components k'");
  fit_cmd->add_option("--q", fit.q, "ADMIXTURE .Q file");
  fit_cmd->add_option("--pi", fit.pi, "Whitespace matrix of individual allele frequencies (m x n)");
  fit_cmd->add_option("--labels", fit.labels, "One population label per individual");
  fit_cmd->add_option("--missing", fit.missing, "reject | drop_snp")->check(CLI::IsMember({"reject", "drop_snp"}));
  fit_cmd->add_option("--out", fit.out, "Output directory");

  PlotArgs plot_args;
  auto* plot = app.add_subcommand("plot", "Draw SVG figures from a fit directory");
  plot->require_subcommand(1);
  auto add_plot = [&](const char* name, const char* help) {
    auto* sub = plot->add_subcommand(name, help);
    sub->add_option("--in", plot_args.in, "Fit output directory")->required();
    sub->add_option("--out", plot_args.out, "SVG path")->required();
    return sub;
  };
  auto* heatmap = add_plot("heatmap", "b_hat above the diagonal, b_hat - c_hat below");
  auto* scatter = add_plot("scatter", "Two principal components");
  scatter->add_option("--pcs", plot_args.pcs, "Components, e.g. 2,3")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::Join);
  auto* scree = add_plot("scree", "Eigenvalues (the first is dropped for pca1)");

  std::string replay_manifest;
  std::string replay_out;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("--manifest", replay_manifest, "manifest.json")->required();
  replay->add_option("--out", replay_out, "Output directory or file")->required();

  try {
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    rc::set_num_threads(threads);
    if (simulate->parsed()) return run_simulate(sim);
    if (fit_cmd->parsed()) return run_fit(fit);
    if (heatmap->parsed()) return run_heatmap(plot_args);
    if (scatter->parsed()) return run_scatter(plot_args);
    if (scree->parsed()) return run_scree(plot_args);
    if (replay->parsed()) return run_replay(replay_manifest, replay_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const rc::ContractError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const rc::DegenerateError& e) {
    std::cerr << "numerical degeneracy: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const rc::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  return run(std::vector<std::string>(argv + 1, argv + argc));
}
