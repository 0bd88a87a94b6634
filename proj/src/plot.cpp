#include "residcorr/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "residcorr/errors.hpp"
#include "residcorr/io.hpp"

namespace residcorr {

namespace {

const char* const kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
                                "#e6ab02", "#a6761d", "#666666", "#1f78b4", "#b2df8a"};

std::string num(double v) { return format_number(v); }

std::string escape(const std::string& text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void open_svg(std::ostringstream& out, double width, double height) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" fill=\"#ffffff\"/>\n";
}

void text(std::ostringstream& out, double x, double y, const std::string& s, const char* anchor = "start",
          int size = 11, double rotate = 0.0) {
  out << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-family=\"sans-serif\" font-size=\""
      << size << "\" text-anchor=\"" << anchor << '"';
  if (rotate != 0.0) out << " transform=\"rotate(" << num(rotate) << ' ' << num(x) << ' ' << num(y) << ")\"";
  out << '>' << escape(s) << "</text>\n";
}

void legend(std::ostringstream& out, double x, double y, double height, double bound,
            const std::string& title) {
  const int steps = 40;
  const double h = height / steps;
  for (int s = 0; s < steps; ++s) {
    const double v = bound * (1.0 - 2.0 * (s + 0.5) / steps);
    out << "<rect x=\"" << num(x) << "\" y=\"" << num(y + s * h) << "\" width=\"14\" height=\""
        << num(h) << "\" fill=\"" << diverging_color(v, bound) << "\"/>\n";
  }
  out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"14\" height=\"" << num(height)
      << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"0.5\"/>\n";
  text(out, x + 18, y + 8, num(bound));
  text(out, x + 18, y + height / 2 + 4, "0");
  text(out, x + 18, y + height, num(-bound));
  text(out, x + 7, y - 8, title, "middle");
}

}  // namespace

double heatmap_bound(const Matrix& values, const BoolMatrix& missing) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (i == j || missing(i, j) || !std::isfinite(values(i, j))) continue;
      worst = std::max(worst, std::abs(values(i, j)));
    }
  }
  return std::max(0.05, worst);
}

std::string diverging_color(double v, double bound) {
  const double t = std::clamp(v / bound, -1.0, 1.0);
  const double fade = 1.0 - std::abs(t);
  int r = 255;
  int g = static_cast<int>(std::lround(255.0 * fade));
  int b = 255;
  if (t > 0) {
    b = g;
  } else {
    r = g;
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string heatmap_svg(const HeatmapSpec& spec) {
  const auto n = spec.upper.rows();
  if (n < 1 || spec.upper.cols() != n || spec.lower.rows() != n || spec.lower.cols() != n ||
      spec.missing.rows() != n || spec.missing.cols() != n) {
    throw ContractError("heatmap matrices must be square and of equal size");
  }
  std::size_t covered = 0;
  for (const std::size_t s : spec.block_sizes) covered += s;
  if (covered != static_cast<std::size_t>(n) || spec.block_names.size() != spec.block_sizes.size()) {
    throw ContractError("heatmap blocks must cover every individual");
  }
  const double upper_bound = heatmap_bound(spec.upper, spec.missing);
  const double lower_bound = heatmap_bound(spec.lower, spec.missing);
  const double cell = std::max(1.0, std::floor(600.0 / double(n)));
  const double margin = 90.0;
  const double side = cell * double(n);
  const double width = margin + side + 140.0;
  const double height = margin + side + 30.0;
  std::ostringstream out;
  open_svg(out, width, height);
  out << "<g shape-rendering=\"crispEdges\">\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      std::string fill;
      if (i == j) {
        fill = "#bdbdbd";
      } else if (spec.missing(i, j)) {
        fill = "#000000";
      } else if (j > i) {
        fill = diverging_color(spec.upper(i, j), upper_bound);
      } else {
        fill = diverging_color(spec.lower(i, j), lower_bound);
      }
      out << "<rect x=\"" << num(margin + double(j) * cell) << "\" y=\"" << num(margin + double(i) * cell)
          << "\" width=\"" << num(cell) << "\" height=\"" << num(cell) << "\" fill=\"" << fill << "\"/>\n";
    }
  }
  out << "</g>\n";
  double at = 0.0;
  for (std::size_t b = 0; b < spec.block_sizes.size(); ++b) {
    const double start = at;
    at += double(spec.block_sizes[b]) * cell;
    const double mid = margin + 0.5 * (start + at);
    text(out, mid, margin - 6, spec.block_names[b], "start", 10, -45.0);
    text(out, margin - 6, mid + 3, spec.block_names[b], "end", 10);
    if (b + 1 < spec.block_sizes.size()) {
      const double pos = margin + at;
      out << "<line x1=\"" << num(pos) << "\" y1=\"" << num(margin) << "\" x2=\"" << num(pos) << "\" y2=\""
          << num(margin + side) << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
      out << "<line x1=\"" << num(margin) << "\" y1=\"" << num(pos) << "\" x2=\"" << num(margin + side)
          << "\" y2=\"" << num(pos) << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    }
  }
  out << "<rect x=\"" << num(margin) << "\" y=\"" << num(margin) << "\" width=\"" << num(side)
      << "\" height=\"" << num(side) << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  const double legend_h = std::min(200.0, side / 2 - 30);
  legend(out, margin + side + 20, margin + 20, legend_h, upper_bound, spec.upper_title + " (upper)");
  legend(out, margin + side + 20, margin + side / 2 + 30, legend_h, lower_bound,
         spec.lower_title + " (lower)");
  out << "</svg>\n";
  return out.str();
}

std::string scatter_svg(const Matrix& coords, std::size_t x, std::size_t y,
                        const PopulationLabels& labels, const std::string& x_title,
                        const std::string& y_title) {
  const auto cx = static_cast<Eigen::Index>(x);
  const auto cy = static_cast<Eigen::Index>(y);
  if (cx >= coords.cols() || cy >= coords.cols()) throw ContractError("scatter component out of range");
  if (static_cast<std::size_t>(coords.rows()) != labels.size()) {
    throw ContractError("scatter coordinates and labels disagree on n");
  }
  const double plot = 480.0;
  const double margin = 60.0;
  const double width = margin * 2 + plot + 120.0;
  const double height = margin * 2 + plot;
  auto range = [&](Eigen::Index c) {
    double lo = coords.col(c).minCoeff();
    double hi = coords.col(c).maxCoeff();
    if (hi - lo < 1e-12) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    return std::pair{lo - pad, hi + pad};
  };
  const auto [x_lo, x_hi] = range(cx);
  const auto [y_lo, y_hi] = range(cy);
  std::ostringstream out;
  open_svg(out, width, height);
  out << "<rect x=\"" << num(margin) << "\" y=\"" << num(margin) << "\" width=\"" << num(plot)
      << "\" height=\"" << num(plot) << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const double px = margin + plot * (coords(i, cx) - x_lo) / (x_hi - x_lo);
    const double py = margin + plot * (1.0 - (coords(i, cy) - y_lo) / (y_hi - y_lo));
    const std::size_t b = labels.block_of(static_cast<std::size_t>(i));
    out << "<circle cx=\"" << num(px) << "\" cy=\"" << num(py) << "\" r=\"3\" fill=\""
        << kPalette[b % std::size(kPalette)] << "\" fill-opacity=\"0.8\"/>\n";
  }
  text(out, margin + plot / 2, height - 20, x_title, "middle", 12);
  text(out, 20, margin + plot / 2, y_title, "middle", 12, -90.0);
  text(out, margin, margin - 10, num(x_lo) + " .. " + num(x_hi) + " by " + num(y_lo) + " .. " + num(y_hi),
       "start", 9);
  for (std::size_t b = 0; b < labels.num_blocks(); ++b) {
    const double ly = margin + 14.0 * double(b) + 6;
    out << "<circle cx=\"" << num(margin + plot + 20) << "\" cy=\"" << num(ly) << "\" r=\"4\" fill=\""
        << kPalette[b % std::size(kPalette)] << "\"/>\n";
    text(out, margin + plot + 30, ly + 4, labels.names()[b]);
  }
  out << "</svg>\n";
  return out.str();
}

std::string scree_svg(const Vector& values, std::size_t first_index) {
  if (values.size() < 1) throw ContractError("scree plot needs at least one eigenvalue");
  const double plot_w = 480.0;
  const double plot_h = 320.0;
  const double margin = 60.0;
  std::ostringstream out;
  open_svg(out, plot_w + 2 * margin, plot_h + 2 * margin);
  const double top = std::max(values.maxCoeff(), 1e-300);
  const double low = std::min(0.0, values.minCoeff());
  const double bar = plot_w / double(values.size());
  const double zero_y = margin + plot_h * top / (top - low);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double y = margin + plot_h * (top - values(i)) / (top - low);
    const double y0 = std::min(y, zero_y);
    out << "<rect x=\"" << num(margin + double(i) * bar) << "\" y=\"" << num(y0) << "\" width=\""
        << num(std::max(bar * 0.8, 0.5)) << "\" height=\"" << num(std::abs(zero_y - y))
        << "\" fill=\"#4a6fa5\"/>\n";
  }
  out << "<line x1=\"" << num(margin) << "\" y1=\"" << num(zero_y) << "\" x2=\"" << num(margin + plot_w)
      << "\" y2=\"" << num(zero_y) << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  text(out, margin + plot_w / 2, plot_h + 2 * margin - 20,
       "eigenvalue rank (from " + std::to_string(first_index) + ")", "middle", 12);
  text(out, margin - 6, margin + 4, num(top), "end", 10);
  text(out, margin - 6, zero_y + 4, "0", "end", 10);
  out << "</svg>\n";
  return out.str();
}

double cluster_separation(const Matrix& coords, const PopulationLabels& labels) {
  if (static_cast<std::size_t>(coords.rows()) != labels.size()) {
    throw ContractError("coordinates and labels disagree on n");
  }
  const std::size_t k = labels.num_blocks();
  if (k < 2) throw ContractError("cluster separation needs at least two blocks");
  Matrix centroids = Matrix::Zero(static_cast<Eigen::Index>(k), coords.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    centroids.row(static_cast<Eigen::Index>(labels.block_of(i))) += coords.row(static_cast<Eigen::Index>(i));
  }
  for (std::size_t b = 0; b < k; ++b) {
    centroids.row(static_cast<Eigen::Index>(b)) /= double(labels.block_sizes()[b]);
  }
  std::vector<double> spread(k, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t b = labels.block_of(i);
    spread[b] += (coords.row(static_cast<Eigen::Index>(i)) - centroids.row(static_cast<Eigen::Index>(b)))
                     .squaredNorm();
  }
  double worst_spread = 0.0;
  for (std::size_t b = 0; b < k; ++b) {
    worst_spread = std::max(worst_spread, std::sqrt(spread[b] / double(labels.block_sizes()[b])));
  }
  double closest = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      closest = std::min(closest, (centroids.row(static_cast<Eigen::Index>(a)) -
                                   centroids.row(static_cast<Eigen::Index>(b)))
                                      .norm());
    }
  }
  if (worst_spread == 0.0) return std::numeric_limits<double>::infinity();
  return closest / worst_spread;
}

Matrix permute_symmetric(const Matrix& m, const std::vector<std::size_t>& order) {
  const auto n = static_cast<Eigen::Index>(order.size());
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out(i, j) = m(static_cast<Eigen::Index>(order[i]), static_cast<Eigen::Index>(order[j]));
    }
  }
  return out;
}

BoolMatrix permute_symmetric(const BoolMatrix& m, const std::vector<std::size_t>& order) {
  const auto n = static_cast<Eigen::Index>(order.size());
  BoolMatrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out(i, j) = m(static_cast<Eigen::Index>(order[i]), static_cast<Eigen::Index>(order[j]));
    }
  }
  return out;
}

}  // namespace residcorr
