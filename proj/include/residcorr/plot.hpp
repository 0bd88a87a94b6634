#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "residcorr/core.hpp"

namespace residcorr {

/// Upper triangle shows `upper` (empirical b_hat), lower triangle `lower`
/// (b_hat - c_hat), each on its own symmetric diverging scale.
struct HeatmapSpec {
  Matrix upper;
  Matrix lower;
  BoolMatrix missing;
  std::vector<std::string> block_names;
  std::vector<std::size_t> block_sizes;  // consecutive blocks in display order
  std::string upper_title = "empirical b";
  std::string lower_title = "b - c";
};

/// max(0.05, max |v|) over the off-diagonal entries that are not missing.
double heatmap_bound(const Matrix& values, const BoolMatrix& missing);
/// Diverging blue-white-red colour for v on [-bound, bound].
std::string diverging_color(double v, double bound);

std::string heatmap_svg(const HeatmapSpec& spec);

/// Scatter of two columns of `coords` coloured by block.
std::string scatter_svg(const Matrix& coords, std::size_t x, std::size_t y,
                        const PopulationLabels& labels, const std::string& x_title,
                        const std::string& y_title);

/// Eigenvalues as bars; `first_index` is the 1-based rank of values(0).
std::string scree_svg(const Vector& values, std::size_t first_index);

/// Smallest distance between block centroids divided by the largest RMS
/// distance of members to their own centroid.
double cluster_separation(const Matrix& coords, const PopulationLabels& labels);

/// Rearranges a square matrix into the given individual order.
Matrix permute_symmetric(const Matrix& m, const std::vector<std::size_t>& order);
BoolMatrix permute_symmetric(const BoolMatrix& m, const std::vector<std::size_t>& order);

}  // namespace residcorr
