#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hyperspec/laws.hpp"

namespace hyperspec {

struct Histogram {
  std::vector<double> edges;  // bins + 1 increasing breakpoints
  std::vector<double> mass;   // fraction of the sample in each bin, sums to 1
};

/// Equal-width histogram. The last bin is closed on the right. Throws
/// DomainError for fewer than 5 bins or an empty sample.
Histogram make_histogram(std::span<const double> values, int bins,
                         std::optional<std::pair<double, double>> range = std::nullopt);

struct PlotOptions {
  int bins = 60;
  int width = 720;
  int height = 440;
  std::string title;
};

/// Standalone SVG: a density-normalized histogram of `values` with one
/// polyline per overlay law. Empirical overlays have no density and are listed
/// in the legend only.
std::string render_spectrum_svg(std::span<const double> values, const std::vector<Law>& overlays,
                                const PlotOptions& options = {});

std::string xml_escape(const std::string& text);

}  // namespace hyperspec
