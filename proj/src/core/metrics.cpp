#include "hyperspec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hyperspec/errors.hpp"

namespace hyperspec {

namespace {

std::vector<double> merged_atoms(const Law& a, const Law& b) {
  std::vector<double> xs;
  for (const Law* law : {&a, &b}) {
    if (const auto* m = law->measure()) xs.insert(xs.end(), m->atoms().begin(), m->atoms().end());
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

std::pair<double, double> joint_range(const Law& a, const Law& b) {
  const auto [alo, ahi] = a.support_hint();
  const auto [blo, bhi] = b.support_hint();
  return {std::min(alo, blo), std::max(ahi, bhi)};
}

double ks_analytic(const Law& a, const Law& b) {
  auto gap = [&](double x) { return std::abs(a.cdf(x) - b.cdf(x)); };
  auto [lo, hi] = joint_range(a, b);
  const double pad = 0.01 * (hi - lo) + 1e-12;
  lo -= pad;
  hi += pad;
  constexpr int kGrid = 4001;
  std::vector<double> xs(kGrid), gs(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    xs[i] = lo + (hi - lo) * i / (kGrid - 1);
    gs[i] = gap(xs[i]);
  }
  // Refine every local maximum within a factor of the best grid value.
  const double best_grid = *std::max_element(gs.begin(), gs.end());
  double best = best_grid;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < kGrid; ++i) {
    const bool peak = (i == 0 || gs[i] >= gs[i - 1]) && (i == kGrid - 1 || gs[i] >= gs[i + 1]);
    if (!peak || gs[i] < 0.5 * best_grid) continue;
    double l = xs[std::max(i - 1, 0)], r = xs[std::min(i + 1, kGrid - 1)];
    double c = r - invphi * (r - l), d = l + invphi * (r - l);
    double gc = gap(c), gd = gap(d);
    while (r - l > 1e-10) {
      if (gc > gd) {
        r = d;
        d = c;
        gd = gc;
        c = r - invphi * (r - l);
        gc = gap(c);
      } else {
        l = c;
        c = d;
        gc = gd;
        d = l + invphi * (r - l);
        gd = gap(d);
      }
    }
    best = std::max({best, gc, gd});
  }
  return std::min(best, 1.0);
}

double integrate_gap(const Law& a, const Law& b, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  auto gap = [&](double x) { return std::abs(a.cdf(x) - b.cdf(x)); };
  double error = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(gap, lo, hi, 12, 1e-10,
                                                                       &error);
}

}  // namespace

double ks_distance(const Law& a, const Law& b) {
  if (!a.is_discrete() && !b.is_discrete()) return ks_analytic(a, b);
  double best = 0.0;
  for (double x : merged_atoms(a, b)) {
    best = std::max(best, std::abs(a.cdf(x) - b.cdf(x)));
    best = std::max(best, std::abs(a.cdf_left(x) - b.cdf_left(x)));
  }
  return std::min(best, 1.0);
}

double w1_distance(const Law& a, const Law& b) {
  double total = 0.0;
  if (a.is_discrete() && b.is_discrete()) {
    const auto xs = merged_atoms(a, b);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      total += std::abs(a.cdf(xs[i]) - b.cdf(xs[i])) * (xs[i + 1] - xs[i]);
    }
    return total;
  }
  std::vector<double> cuts = merged_atoms(a, b);
  const auto [lo, hi] = joint_range(a, b);
  for (const Law* law : {&a, &b}) {
    if (!law->is_discrete()) {
      const auto [l, h] = law->support_hint();
      cuts.push_back(l);
      cuts.push_back(h);
    }
  }
  constexpr int kPieces = 64;
  for (int i = 1; i < kPieces; ++i) cuts.push_back(lo + (hi - lo) * i / kPieces);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += integrate_gap(a, b, cuts[i], cuts[i + 1]);
  if (!std::isfinite(total)) throw DomainError("w1_distance: integral did not converge");
  return total;
}

double bl_upper_bound(const Law& a, const Law& b) {
  return std::min(w1_distance(a, b), 2.0 * ks_distance(a, b));
}

double hausdorff_spectra(const SpectralSample& a, const SpectralSample& b) {
  if (a.size() == 0 || b.size() == 0) throw DomainError("hausdorff_spectra: empty spectrum");
  std::vector<double> x(a.eigenvalues().begin(), a.eigenvalues().end());
  std::vector<double> y(b.eigenvalues().begin(), b.eigenvalues().end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  // Largest distance from a point of `from` to its nearest point in `to`.
  auto directed = [](const std::vector<double>& from, const std::vector<double>& to) {
    double worst = 0.0;
    std::size_t j = 0;
    for (double v : from) {
      while (j + 1 < to.size() && to[j + 1] <= v) ++j;
      double d = std::abs(v - to[j]);
      if (j + 1 < to.size()) d = std::min(d, std::abs(to[j + 1] - v));
      worst = std::max(worst, d);
    }
    return worst;
  };
  return std::max(directed(x, y), directed(y, x));
}

MetricReport compare_laws(const Law& a, const Law& b) {
  MetricReport r;
  r.ks = ks_distance(a, b);
  r.w1 = w1_distance(a, b);
  r.bl_upper = std::min(r.w1, 2.0 * r.ks);
  r.a_label = a.label();
  r.b_label = b.label();
  r.notes = "bl_upper = min(w1, 2 ks) bounds the bounded-Lipschitz distance from above";
  return r;
}

nlohmann::json to_json(const MetricReport& report) {
  return {{"ks", report.ks},       {"w1", report.w1},           {"bl_upper", report.bl_upper},
          {"a", report.a_label},   {"b", report.b_label},       {"notes", report.notes}};
}

}  // namespace hyperspec
