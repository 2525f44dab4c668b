#include "hyperspec/plot.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "hyperspec/errors.hpp"

namespace hyperspec {

Histogram make_histogram(std::span<const double> values, int bins,
                         std::optional<std::pair<double, double>> range) {
  if (bins < 5) throw DomainError("make_histogram: needs at least 5 bins");
  if (values.empty()) throw DomainError("make_histogram: empty sample");
  auto [lo, hi] = range.value_or(std::pair{*std::min_element(values.begin(), values.end()),
                                           *std::max_element(values.begin(), values.end())});
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * i / bins;
  h.mass.assign(static_cast<std::size_t>(bins), 0.0);
  std::size_t kept = 0;
  for (double v : values) {
    if (v < lo || v > hi) continue;
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
    b = std::min(b, static_cast<std::size_t>(bins) - 1);
    h.mass[b] += 1.0;
    ++kept;
  }
  if (kept == 0) throw DomainError("make_histogram: no values inside the range");
  for (double& m : h.mass) m /= static_cast<double>(kept);
  return h;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += ch;
    }
  }
  return out;
}

namespace {

constexpr const char* kColors[] = {"#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

}  // namespace

std::string render_spectrum_svg(std::span<const double> values, const std::vector<Law>& overlays,
                                const PlotOptions& options) {
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  for (const auto& law : overlays) {
    if (law.is_discrete()) continue;
    const auto [l, h] = law.support_hint();
    lo = std::min(lo, l);
    hi = std::max(hi, h);
  }
  const double pad = 0.02 * (hi - lo) + 1e-9;
  lo -= pad;
  hi += pad;
  const Histogram hist = make_histogram(values, options.bins, std::pair{lo, hi});
  const double bin_width = (hi - lo) / options.bins;

  constexpr int kCurvePoints = 400;
  std::vector<std::vector<std::pair<double, double>>> curves(overlays.size());
  double top = 0.0;
  for (double m : hist.mass) top = std::max(top, m / bin_width);
  for (std::size_t k = 0; k < overlays.size(); ++k) {
    if (overlays[k].is_discrete()) continue;
    for (int i = 0; i <= kCurvePoints; ++i) {
      const double x = lo + (hi - lo) * i / kCurvePoints;
      const double y = overlays[k].density(x);
      if (!std::isfinite(y)) continue;
      curves[k].emplace_back(x, y);
      top = std::max(top, y);
    }
  }
  if (!(top > 0.0)) top = 1.0;
  top *= 1.08;

  const double left = 56, right = 16, upper = options.title.empty() ? 16 : 36, lower = 40;
  const double pw = options.width - left - right, ph = options.height - upper - lower;
  auto sx = [&](double x) { return left + (x - lo) / (hi - lo) * pw; };
  auto sy = [&](double y) { return upper + ph - y / top * ph; };

  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\""
    << options.height << "\" viewBox=\"0 0 " << options.width << ' ' << options.height << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    s << "<text x=\"" << options.width / 2.0 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << xml_escape(options.title) << "</text>\n";
  }
  s << "<g fill=\"#9ecae1\" stroke=\"#3182bd\" stroke-width=\"0.5\">\n";
  for (std::size_t b = 0; b < hist.mass.size(); ++b) {
    const double y = sy(hist.mass[b] / bin_width);
    s << "<rect x=\"" << sx(hist.edges[b]) << "\" y=\"" << y << "\" width=\""
      << sx(hist.edges[b + 1]) - sx(hist.edges[b]) << "\" height=\"" << upper + ph - y << "\"/>\n";
  }
  s << "</g>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    if (curves[k].empty()) continue;
    s << "<polyline fill=\"none\" stroke=\"" << kColors[k % 5] << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : curves[k]) s << sx(x) << ',' << sy(y) << ' ';
    s << "\"/>\n";
  }
  // Axes with a handful of ticks.
  s << "<g stroke=\"black\" stroke-width=\"1\">\n";
  s << "<line x1=\"" << left << "\" y1=\"" << upper + ph << "\" x2=\"" << left + pw << "\" y2=\"" << upper + ph
    << "\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << upper << "\" x2=\"" << left << "\" y2=\"" << upper + ph << "\"/>\n";
  s << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double x = lo + (hi - lo) * i / 5;
    const double y = top * i / 5;
    s << "<text x=\"" << sx(x) << "\" y=\"" << upper + ph + 16 << "\" text-anchor=\"middle\">"
      << std::setprecision(3) << x << std::setprecision(2) << "</text>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">" << std::setprecision(3)
      << y << std::setprecision(2) << "</text>\n";
  }
  for (std::size_t k = 0; k < overlays.size(); ++k) {
    const double y = upper + 14 + 16.0 * static_cast<double>(k);
    s << "<text x=\"" << left + pw - 8 << "\" y=\"" << y << "\" text-anchor=\"end\" fill=\"" << kColors[k % 5]
      << "\">" << xml_escape(overlays[k].label()) << "</text>\n";
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

}  // namespace hyperspec
