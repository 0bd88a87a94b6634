#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace residcorr {

/// Worker count for block-parallel loops. 0 selects the value of
/// RESIDCORR_THREADS, falling back to the hardware concurrency.
void set_num_threads(std::size_t threads);
std::size_t num_threads();

/// Runs task(i) for i in [0, count) on up to num_threads() workers.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task);

/// Computes make(i) for every block in parallel and hands the results to
/// fold() strictly in block order, so floating-point sums do not depend on the
/// thread count. At most a few waves of partials are alive at once.
template <class Partial, class Make, class Fold>
void ordered_reduce(std::size_t num_blocks, Make&& make, Fold&& fold) {
  const std::size_t wave = std::max<std::size_t>(1, 2 * num_threads());
  std::vector<std::optional<Partial>> slots(wave);
  for (std::size_t start = 0; start < num_blocks; start += wave) {
    const std::size_t count = std::min(wave, num_blocks - start);
    parallel_for(count, [&](std::size_t j) { slots[j].emplace(make(start + j)); });
    for (std::size_t j = 0; j < count; ++j) {
      fold(std::move(*slots[j]));
      slots[j].reset();
    }
  }
}

}  // namespace residcorr
