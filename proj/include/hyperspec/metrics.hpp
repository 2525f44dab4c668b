#pragma once

#include <string>

#include <json.hpp>

#include "hyperspec/laws.hpp"
#include "hyperspec/spectra.hpp"

namespace hyperspec {

/// sup_x |F_a(x) - F_b(x)|. Exact over jump points when either side is
/// empirical; grid search plus golden-section refinement otherwise.
double ks_distance(const Law& a, const Law& b);

/// Integral of |F_a - F_b|. Exact for two empirical laws, Gauss-Kronrod
/// quadrature between breakpoints otherwise.
double w1_distance(const Law& a, const Law& b);

/// min(w1, 2 ks): an upper bound on the bounded-Lipschitz distance, not the
/// distance itself.
double bl_upper_bound(const Law& a, const Law& b);

double hausdorff_spectra(const SpectralSample& a, const SpectralSample& b);

struct MetricReport {
  double ks = 0.0;
  double w1 = 0.0;
  double bl_upper = 0.0;
  std::string a_label;
  std::string b_label;
  std::string notes;
};

MetricReport compare_laws(const Law& a, const Law& b);
nlohmann::json to_json(const MetricReport& report);

}  // namespace hyperspec
