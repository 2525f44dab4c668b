#define HYPERSPEC_BUILDING
#include "hyperspec/hyperspec.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hyperspec/combinatorics.hpp"
#include "hyperspec/errors.hpp"
#include "hyperspec/experiments.hpp"
#include "hyperspec/gham.hpp"
#include "hyperspec/laws.hpp"
#include "hyperspec/metrics.hpp"
#include "hyperspec/plot.hpp"
#include "hyperspec/spectra.hpp"

struct hs_hypergraph {
  hyperspec::HypergraphSample sample;
};

struct hs_matrix {
  hyperspec::SymmetricMatrix m;
  int r;
  hyperspec::Provenance provenance;
};

struct hs_spectrum {
  hyperspec::SpectralSample s;
  int r;
};

struct hs_law {
  hyperspec::Law law;
};

namespace {

thread_local std::string last_error;

hs_status status_of(hyperspec::ErrorKind kind) {
  using hyperspec::ErrorKind;
  switch (kind) {
    case ErrorKind::domain: return HS_ERR_DOMAIN;
    case ErrorKind::resource: return HS_ERR_RESOURCE;
    case ErrorKind::convergence: return HS_ERR_CONVERGENCE;
    case ErrorKind::parse: return HS_ERR_PARSE;
    case ErrorKind::io: return HS_ERR_IO;
    case ErrorKind::config: return HS_ERR_CONFIG;
    case ErrorKind::internal: return HS_ERR_INTERNAL;
  }
  return HS_ERR_INTERNAL;
}

template <class F>
hs_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return HS_OK;
  } catch (const hyperspec::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const nlohmann::json::exception& e) {
    last_error = std::string("invalid JSON: ") + e.what();
    return HS_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return HS_ERR_RESOURCE;
  } catch (const std::exception& e) {
    last_error = e.what();
    return HS_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return HS_ERR_INTERNAL;
  }
}

hs_status null_argument(const char* what) {
  last_error = std::string("null argument: ") + what;
  return HS_ERR_NULL;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

hyperspec::SymmetricMatrix convert(const hyperspec::SymmetricMatrix& gham, hs_matrix_kind kind, int r) {
  switch (kind) {
    case HS_MATRIX_GHAM: return gham;
    case HS_MATRIX_LAPLACIAN: return hyperspec::laplacian(gham);
    case HS_MATRIX_LAPLACIAN_TILDE: return hyperspec::laplacian_tilde(gham, r);
    case HS_MATRIX_ADJACENCY: break;
  }
  throw hyperspec::DomainError("unsupported matrix kind for this source");
}

}  // namespace

#define HS_REQUIRE(ptr) \
  if (!(ptr)) return null_argument(#ptr)

extern "C" {

const char* hs_version(void) { return "0.1.0"; }

const char* hs_last_error(void) { return last_error.c_str(); }

const char* hs_status_name(hs_status status) {
  switch (status) {
    case HS_OK: return "ok";
    case HS_ERR_DOMAIN: return "domain";
    case HS_ERR_RESOURCE: return "resource";
    case HS_ERR_CONVERGENCE: return "convergence";
    case HS_ERR_PARSE: return "parse";
    case HS_ERR_IO: return "io";
    case HS_ERR_CONFIG: return "config";
    case HS_ERR_INTERNAL: return "internal";
    case HS_ERR_NULL: return "null";
  }
  return "unknown";
}

void hs_string_free(char* s) { std::free(s); }

hs_status hs_hypergraph_sample(int n, int r, double p, uint64_t seed, double edge_budget, hs_hypergraph** out) {
  HS_REQUIRE(out);
  return guarded([&] {
    const auto params = hyperspec::ModelParams::make(n, r, p);
    *out = new hs_hypergraph{hyperspec::sample_hypergraph(params, seed, edge_budget)};
  });
}

hs_status hs_hypergraph_load(const char* path, hs_hypergraph** out) {
  HS_REQUIRE(path);
  HS_REQUIRE(out);
  return guarded([&] { *out = new hs_hypergraph{hyperspec::load_hypergraph(path)}; });
}

hs_status hs_hypergraph_save(const hs_hypergraph* h, const char* path) {
  HS_REQUIRE(h);
  HS_REQUIRE(path);
  return guarded([&] { hyperspec::save_hypergraph(h->sample, path); });
}

hs_status hs_hypergraph_edge_count(const hs_hypergraph* h, size_t* out) {
  HS_REQUIRE(h);
  HS_REQUIRE(out);
  *out = h->sample.edge_count();
  return HS_OK;
}

hs_status hs_hypergraph_edges(const hs_hypergraph* h, uint32_t* buffer, size_t length) {
  HS_REQUIRE(h);
  const auto flat = h->sample.flat_edges();
  if (flat.empty()) return HS_OK;
  HS_REQUIRE(buffer);
  return guarded([&] {
    if (length < flat.size()) throw hyperspec::DomainError("hs_hypergraph_edges: buffer too small");
    std::copy(flat.begin(), flat.end(), buffer);
  });
}

hs_status hs_hypergraph_to_json(const hs_hypergraph* h, char** out) {
  HS_REQUIRE(h);
  HS_REQUIRE(out);
  return guarded([&] { *out = copy_string(hyperspec::to_json(h->sample).dump()); });
}

void hs_hypergraph_free(hs_hypergraph* h) { delete h; }

hs_status hs_matrix_from_hypergraph(const hs_hypergraph* h, hs_matrix_kind kind, hs_matrix** out) {
  HS_REQUIRE(h);
  HS_REQUIRE(out);
  return guarded([&] {
    const auto& params = h->sample.params();
    hyperspec::SymmetricMatrix a = hyperspec::adjacency_from_hypergraph(h->sample);
    hyperspec::Provenance prov{"bernoulli_hypergraph", h->sample.seed()};
    if (kind == HS_MATRIX_ADJACENCY) {
      *out = new hs_matrix{std::move(a), params.r, prov};
      return;
    }
    auto m = convert(hyperspec::gham_from_adjacency(a, params), kind, params.r);
    *out = new hs_matrix{std::move(m), params.r, prov};
  });
}

hs_status hs_matrix_surrogate(int n, int r, double p, uint64_t seed, hs_matrix_kind kind, hs_matrix** out) {
  HS_REQUIRE(out);
  return guarded([&] {
    const auto params = hyperspec::ModelParams::make(n, r, p);
    auto m = convert(hyperspec::sample_surrogate_matrix(params, seed), kind, r);
    *out = new hs_matrix{std::move(m), r, {"gaussian_surrogate", seed}};
  });
}

hs_status hs_matrix_dim(const hs_matrix* m, size_t* out) {
  HS_REQUIRE(m);
  HS_REQUIRE(out);
  *out = m->m.dim();
  return HS_OK;
}

hs_status hs_matrix_get(const hs_matrix* m, size_t i, size_t j, double* out) {
  HS_REQUIRE(m);
  HS_REQUIRE(out);
  return guarded([&] {
    if (i >= m->m.dim() || j >= m->m.dim()) throw hyperspec::DomainError("hs_matrix_get: index out of range");
    *out = m->m(i, j);
  });
}

hs_status hs_matrix_write_csv(const hs_matrix* m, const char* path) {
  HS_REQUIRE(m);
  HS_REQUIRE(path);
  return guarded([&] { hyperspec::write_matrix_csv(m->m, path); });
}

hs_status hs_matrix_write_binary(const hs_matrix* m, const char* path) {
  HS_REQUIRE(m);
  HS_REQUIRE(path);
  return guarded([&] { hyperspec::write_matrix_binary(m->m, path); });
}

void hs_matrix_free(hs_matrix* m) { delete m; }

hs_status hs_spectrum_compute(const hs_matrix* m, const char* scaling, hs_spectrum** out) {
  HS_REQUIRE(m);
  HS_REQUIRE(out);
  return guarded([&] {
    const auto s = scaling ? hyperspec::scaling_from_string(scaling) : hyperspec::Scaling::raw;
    const double f = hyperspec::scaling_factor(s, static_cast<int>(m->m.dim()), m->r);
    *out = new hs_spectrum{hyperspec::eigenvalues_symmetric(m->m, s, f, m->provenance), m->r};
  });
}

hs_status hs_spectrum_read_csv(const char* path, hs_spectrum** out) {
  HS_REQUIRE(path);
  HS_REQUIRE(out);
  return guarded([&] { *out = new hs_spectrum{hyperspec::read_spectrum_csv(path), 0}; });
}

hs_status hs_spectrum_write_csv(const hs_spectrum* s, const char* path) {
  HS_REQUIRE(s);
  HS_REQUIRE(path);
  return guarded([&] { hyperspec::write_spectrum_csv(s->s, path); });
}

hs_status hs_spectrum_size(const hs_spectrum* s, size_t* out) {
  HS_REQUIRE(s);
  HS_REQUIRE(out);
  *out = s->s.size();
  return HS_OK;
}

hs_status hs_spectrum_values(const hs_spectrum* s, double* buffer, size_t length) {
  HS_REQUIRE(s);
  HS_REQUIRE(buffer);
  return guarded([&] {
    const auto v = s->s.eigenvalues();
    if (length < v.size()) throw hyperspec::DomainError("hs_spectrum_values: buffer too small");
    std::copy(v.begin(), v.end(), buffer);
  });
}

hs_status hs_spectrum_to_json(const hs_spectrum* s, char** out) {
  HS_REQUIRE(s);
  HS_REQUIRE(out);
  return guarded([&] {
    const auto& p = s->s.provenance();
    const auto v = s->s.eigenvalues();
    nlohmann::json j = {{"ensemble", p.ensemble},
                        {"seed", p.seed},
                        {"scaling", hyperspec::to_string(s->s.scaling())},
                        {"n", v.size()},
                        {"eigenvalues", std::vector<double>(v.begin(), v.end())}};
    *out = copy_string(j.dump());
  });
}

hs_status hs_spectrum_svg(const hs_spectrum* s, const hs_law* const* overlays, size_t overlay_count, int bins,
                          const char* title, char** out) {
  HS_REQUIRE(s);
  HS_REQUIRE(out);
  if (overlay_count > 0) HS_REQUIRE(overlays);
  return guarded([&] {
    std::vector<hyperspec::Law> laws;
    for (size_t i = 0; i < overlay_count; ++i) {
      if (!overlays[i]) throw hyperspec::DomainError("hs_spectrum_svg: null overlay");
      laws.push_back(overlays[i]->law);
    }
    hyperspec::PlotOptions options;
    if (bins > 0) options.bins = bins;
    if (title) options.title = title;
    *out = copy_string(hyperspec::render_spectrum_svg(s->s.eigenvalues(), laws, options));
  });
}

void hs_spectrum_free(hs_spectrum* s) { delete s; }

hs_status hs_law_from_json(const char* descriptor, hs_law** out) {
  HS_REQUIRE(descriptor);
  HS_REQUIRE(out);
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(descriptor);
    } catch (const nlohmann::json::exception& e) {
      throw hyperspec::ParseError(std::string("law descriptor is not valid JSON: ") + e.what());
    }
    *out = new hs_law{hyperspec::Law::from_descriptor(j)};
  });
}

hs_status hs_law_from_spectrum(const hs_spectrum* s, hs_law** out) {
  HS_REQUIRE(s);
  HS_REQUIRE(out);
  return guarded([&] { *out = new hs_law{hyperspec::Law::empirical(hyperspec::esd(s->s))}; });
}

hs_status hs_law_cdf(const hs_law* law, double x, double* out) {
  HS_REQUIRE(law);
  HS_REQUIRE(out);
  return guarded([&] { *out = law->law.cdf(x); });
}

hs_status hs_law_density(const hs_law* law, double x, double* out) {
  HS_REQUIRE(law);
  HS_REQUIRE(out);
  return guarded([&] { *out = law->law.density(x); });
}

hs_status hs_law_stieltjes(const hs_law* law, double re, double im, double* out_re, double* out_im) {
  HS_REQUIRE(law);
  HS_REQUIRE(out_re);
  HS_REQUIRE(out_im);
  return guarded([&] {
    const auto g = law->law.stieltjes({re, im});
    *out_re = g.real();
    *out_im = g.imag();
  });
}

hs_status hs_law_moments(const hs_law* law, double* mean, double* variance) {
  HS_REQUIRE(law);
  HS_REQUIRE(mean);
  HS_REQUIRE(variance);
  return guarded([&] {
    *mean = law->law.mean();
    *variance = law->law.variance();
  });
}

hs_status hs_law_label(const hs_law* law, char** out) {
  HS_REQUIRE(law);
  HS_REQUIRE(out);
  return guarded([&] { *out = copy_string(law->law.label()); });
}

hs_status hs_law_descriptor(const hs_law* law, char** out) {
  HS_REQUIRE(law);
  HS_REQUIRE(out);
  return guarded([&] { *out = copy_string(law->law.descriptor().dump()); });
}

hs_status hs_law_tabulate(const hs_law* law, double lo, double hi, int points, char** out_csv) {
  HS_REQUIRE(law);
  HS_REQUIRE(out_csv);
  return guarded([&] {
    if (points < 2) throw hyperspec::DomainError("hs_law_tabulate: needs at least 2 points");
    if (!(lo < hi)) std::tie(lo, hi) = law->law.support_hint();
    std::ostringstream s;
    s.precision(17);
    s << "x,density,cdf\n";
    const bool discrete = law->law.is_discrete();
    for (int i = 0; i < points; ++i) {
      const double x = lo + (hi - lo) * i / (points - 1);
      s << x << ',';
      if (discrete) s << "nan";
      else s << law->law.density(x);
      s << ',' << law->law.cdf(x) << '\n';
    }
    *out_csv = copy_string(s.str());
  });
}

void hs_law_free(hs_law* law) { delete law; }

hs_status hs_metrics_compare(const hs_law* a, const hs_law* b, char** out_json) {
  HS_REQUIRE(a);
  HS_REQUIRE(b);
  HS_REQUIRE(out_json);
  return guarded([&] {
    *out_json = copy_string(hyperspec::to_json(hyperspec::compare_laws(a->law, b->law)).dump());
  });
}

hs_status hs_experiment_default_config(char** out_json) {
  HS_REQUIRE(out_json);
  return guarded([&] { *out_json = copy_string(hyperspec::to_json(hyperspec::ExperimentConfig{}).dump(2)); });
}

hs_status hs_experiment_run(const char* config_json, const char* out_dir, const char* timestamp,
                            char** out_record_json) {
  HS_REQUIRE(config_json);
  HS_REQUIRE(out_record_json);
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::exception& e) {
      throw hyperspec::ParseError(std::string("experiment config is not valid JSON: ") + e.what());
    }
    auto record = hyperspec::run_experiment(hyperspec::config_from_json(j));
    nlohmann::json out;
    if (out_dir) {
      const auto dir = hyperspec::persist_record(record, out_dir, timestamp ? timestamp : "");
      out = hyperspec::to_json(record);
      out["record_dir"] = dir.string();
    } else {
      out = hyperspec::to_json(record);
    }
    *out_record_json = copy_string(out.dump(2));
  });
}

hs_status hs_diagnostics(int n, int r, double p, char** out_json) {
  HS_REQUIRE(out_json);
  return guarded([&] {
    const auto params = hyperspec::ModelParams::make(n, r, p);
    *out_json = copy_string(hyperspec::to_json(hyperspec::assumption_diagnostics(params)).dump());
  });
}

}  // extern "C"
