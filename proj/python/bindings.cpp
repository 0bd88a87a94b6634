#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "residcorr/diagnostics.hpp"
#include "residcorr/errors.hpp"
#include "residcorr/estimators.hpp"
#include "residcorr/io.hpp"
#include "residcorr/parallel.hpp"
#include "residcorr/pipeline.hpp"
#include "residcorr/simulate.hpp"
#include "residcorr/spectral.hpp"

namespace py = pybind11;
namespace rc = residcorr;

namespace {

using GenotypeArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

rc::GenotypeMatrix to_genotypes(const GenotypeArray& g) {
  if (g.ndim() != 2) throw rc::ContractError("genotypes must be a 2-D array (SNPs x individuals)");
  const auto m = static_cast<std::size_t>(g.shape(0));
  const auto n = static_cast<std::size_t>(g.shape(1));
  std::vector<std::uint8_t> data(g.data(), g.data() + m * n);
  return rc::GenotypeMatrix(m, n, std::move(data));
}

GenotypeArray to_array(const rc::GenotypeMatrix& g) {
  GenotypeArray out({g.num_snps(), g.num_individuals()});
  std::memcpy(out.mutable_data(), g.data().data(), g.data().size());
  return out;
}

rc::PopulationLabels labels_for(const std::optional<std::vector<std::string>>& names, std::size_t n) {
  if (!names) return rc::PopulationLabels::single(n);
  return rc::PopulationLabels::from_names(*names);
}

py::dict summary_rows(const rc::BlockSummary& s) {
  py::list rows;
  for (const auto& st : s.stats) {
    py::dict row;
    row["block_a"] = s.names[st.block_a];
    row["block_b"] = s.names[st.block_b];
    row["stat"] = std::string(rc::to_string(st.stat));
    row["mean"] = st.mean;
    row["sd"] = st.sd;
    row["count"] = st.count;
    row["reference"] = st.reference ? py::cast(*st.reference) : py::none();
    rows.append(row);
  }
  py::dict out;
  out["rows"] = rows;
  out["max_abs_within_diff"] = s.max_abs_within_diff();
  return out;
}

py::dict simulate(int scenario, std::optional<std::size_t> m, std::optional<std::vector<std::size_t>> sizes,
                  std::uint64_t seed, std::optional<double> maf) {
  auto spec = rc::ScenarioSpec::preset(scenario);
  if (m) spec.m = *m;
  if (sizes) spec.sizes = *sizes;
  if (maf) spec.maf_threshold = *maf;
  spec.seed = seed;
  std::optional<rc::SimulatedDataset> sim;
  {
    py::gil_scoped_release release;
    sim.emplace(rc::simulate(spec));
  }
  const auto& data = *sim;
  py::dict out;
  out["genotypes"] = to_array(data.genotypes);
  out["labels"] = data.labels.per_individual();
  out["kept_snps"] = data.kept_snp_indices;
  out["q"] = data.truth ? py::cast(data.truth->q()) : py::none();
  return out;
}

py::dict fit(const GenotypeArray& genotypes, const std::string& method, std::optional<std::size_t> k,
             std::optional<std::vector<std::string>> labels, std::optional<rc::Matrix> q_hat,
             std::optional<rc::Matrix> pi_hat) {
  const auto g = to_genotypes(genotypes);
  rc::FitRequest request;
  request.method = rc::parse_projection_method(method);
  request.k_prime = k ? *k : (q_hat ? static_cast<std::size_t>(q_hat->rows()) : 1);
  if (q_hat) request.q_hat = &*q_hat;
  if (pi_hat) request.pi_hat = &*pi_hat;
  const auto population = labels_for(labels, g.num_individuals());
  std::optional<rc::FitResult> result;
  {
    py::gil_scoped_release release;
    rc::FitSession session(g);
    result.emplace(session.fit(request, population));
  }
  py::dict out;
  out["projection"] = result->projection.matrix();
  out["b_hat"] = result->report.b_hat();
  out["c_hat"] = result->report.c_hat();
  out["diff"] = result->report.diff();
  out["undefined"] = rc::BoolMatrix(result->report.undefined_mask());
  out["heterozygosity"] = result->d.values();
  out["summary"] = summary_rows(result->summary);
  out["eigenvalues"] = result->eig ? py::cast(result->eig->values()) : py::none();
  out["m"] = result->m;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Residual correlation diagnostics for admixture and PCA fits";

  auto base = py::register_exception<rc::Error>(m, "Error");
  py::register_exception<rc::ContractError>(m, "ContractError", base.ptr());
  py::register_exception<rc::DataError>(m, "DataError", base.ptr());
  py::register_exception<rc::DegenerateError>(m, "DegenerateError", base.ptr());

  m.def("set_num_threads", &rc::set_num_threads, py::arg("threads"));
  m.def("num_threads", &rc::num_threads);

  m.def("simulate", &simulate, py::arg("scenario"), py::arg("m") = py::none(), py::arg("sizes") = py::none(),
        py::arg("seed") = 1, py::arg("maf") = py::none(),
        "Simulate one of the five scenarios; returns genotypes (SNPs x individuals), labels and Q.");
  m.def("fit", &fit, py::arg("genotypes"), py::arg("method") = "pca1", py::arg("k") = py::none(),
        py::arg("labels") = py::none(), py::arg("q") = py::none(), py::arg("pi") = py::none(),
        "Project, form residual correlations and summarise them by block.");

  m.def(
      "eig_sym",
      [](const rc::Matrix& a) {
        const auto eig = rc::eig_sym(a);
        return py::make_tuple(eig.values(), eig.vectors());
      },
      py::arg("a"), "Eigenvalues (descending) and eigenvectors of a symmetric matrix.");
  m.def(
      "heterozygosity",
      [](const GenotypeArray& g) { return rc::heterozygosity_diag(to_genotypes(g)).values(); }, py::arg("genotypes"));
  m.def(
      "project_pca1", [](const GenotypeArray& g, std::size_t k) { return rc::project_pca1(to_genotypes(g), k).matrix(); },
      py::arg("genotypes"), py::arg("k"));
  m.def(
      "project_pca2", [](const GenotypeArray& g, std::size_t k) { return rc::project_pca2(to_genotypes(g), k).matrix(); },
      py::arg("genotypes"), py::arg("k"));
  m.def(
      "project_pca3", [](const GenotypeArray& g, std::size_t k) { return rc::project_pca3(to_genotypes(g), k).matrix(); },
      py::arg("genotypes"), py::arg("k"));
  m.def(
      "project_null", [](std::size_t n) { return rc::project_null(n).matrix(); }, py::arg("n"));
  m.def(
      "project_from_q", [](const rc::Matrix& q) { return rc::project_from_q(q).matrix(); }, py::arg("q"));
  m.def(
      "project_from_pi", [](const rc::Matrix& pi, std::size_t k) { return rc::project_from_pi(pi, k).matrix(); },
      py::arg("pi"), py::arg("k"));
  m.def(
      "read_bed",
      [](const std::string& prefix, const std::string& missing) {
        auto v = rc::read_bed(rc::PlinkPaths::from_prefix(prefix), rc::parse_missing_policy(missing));
        return py::make_tuple(to_array(v.genotypes), v.dropped_snps);
      },
      py::arg("prefix"), py::arg("missing") = "drop_snp");
  m.def(
      "write_bed",
      [](const GenotypeArray& g, const std::string& prefix) {
        const auto gm = to_genotypes(g);
        std::vector<std::string> snps(gm.num_snps());
        std::vector<std::string> samples(gm.num_individuals());
        for (std::size_t s = 0; s < snps.size(); ++s) snps[s] = "snp" + std::to_string(s + 1);
        for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = "ind" + std::to_string(i + 1);
        rc::write_bed(rc::GenotypeMatrix(gm.num_snps(), gm.num_individuals(), gm.data(), snps, samples),
                      rc::PlinkPaths::from_prefix(prefix));
      },
      py::arg("genotypes"), py::arg("prefix"));
}
