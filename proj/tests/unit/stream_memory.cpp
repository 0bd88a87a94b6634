#include <sys/resource.h>

#include <cstdio>
#include <random>

#include "residcorr/estimators.hpp"
#include "residcorr/io.hpp"
#include "residcorr/parallel.hpp"

using namespace residcorr;

namespace {

double peak_mib() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<double>(usage.ru_maxrss) / 1024.0;
}

}  // namespace

int main() {
  const std::size_t m = 400000;
  const std::size_t n = 100;
  const fs::path dir = fs::temp_directory_path() / "residcorr_stream_memory";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto paths = PlinkPaths::from_prefix(dir / "wide");
  std::vector<std::string> snps(m);
  for (std::size_t s = 0; s < m; ++s) snps[s] = "s" + std::to_string(s);
  std::vector<std::string> samples(n);
  for (std::size_t i = 0; i < n; ++i) samples[i] = "i" + std::to_string(i);
  {
    BedWriter writer(paths, snps, samples);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> pick(0, 2);
    std::vector<std::uint8_t> row(n);
    for (std::size_t s = 0; s < m; ++s) {
      for (auto& v : row) v = static_cast<std::uint8_t>(pick(rng));
      writer.write_row(row);
    }
    writer.close();
  }
  snps.clear();
  snps.shrink_to_fit();
  set_num_threads(1);
  const double before = peak_mib();
  BedSource source(paths, MissingPolicy::reject);
  const auto stats = accumulate_stats(source);
  const auto h = gram_pca1(stats);
  const double growth = peak_mib() - before;
  const double dense = static_cast<double>(m * n * sizeof(double)) / (1024.0 * 1024.0);
  const double limit = 64.0;
  const bool ok = stats.m == m && h.matrix().allFinite() && growth < limit;
  std::printf("%s streaming memory: peak growth %.1f MiB for m = %zu, n = %zu (limit %.0f MiB, dense %.0f MiB)\n",
              ok ? "PASS" : "FAIL", growth, m, n, limit, dense);
  fs::remove_all(dir);
  return ok ? 0 : 1;
}
