// Command-line front end. Everything numerical goes through the C API in
// hyperspec.h; this file only parses flags and formats output.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hyperspec/hyperspec.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Failure {
  hs_status status;
  std::string message;
};

void check(hs_status status) {
  if (status != HS_OK) throw Failure{status, hs_last_error()};
}

std::string take(char* s) {
  std::string out(s ? s : "");
  hs_string_free(s);
  return out;
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Hypergraph = std::unique_ptr<hs_hypergraph, Deleter<hs_hypergraph, hs_hypergraph_free>>;
using Matrix = std::unique_ptr<hs_matrix, Deleter<hs_matrix, hs_matrix_free>>;
using Spectrum = std::unique_ptr<hs_spectrum, Deleter<hs_spectrum, hs_spectrum_free>>;
using LawHandle = std::unique_ptr<hs_law, Deleter<hs_law, hs_law_free>>;

struct Globals {
  std::uint64_t seed = 1;
  std::string out_dir;
  int threads = 0;
  std::string format = "csv";
  std::string timestamp;
};

fs::path output_path(const Globals& g, const std::string& explicit_path, const std::string& fallback) {
  fs::path p = explicit_path.empty() ? fs::path(fallback) : fs::path(explicit_path);
  if (!g.out_dir.empty() && p.is_relative()) p = fs::path(g.out_dir) / p;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Failure{HS_ERR_IO, "cannot write " + path.string()};
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{HS_ERR_IO, "cannot read " + path.string()};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// A law argument is inline JSON or a path to a JSON file.
LawHandle law_from_argument(const std::string& arg) {
  std::string text = arg;
  if (!arg.empty() && arg.front() != '{') text = read_text(arg);
  hs_law* law = nullptr;
  check(hs_law_from_json(text.c_str(), &law));
  return LawHandle(law);
}

hs_matrix_kind matrix_kind(const std::string& name) {
  if (name == "gham") return HS_MATRIX_GHAM;
  if (name == "laplacian") return HS_MATRIX_LAPLACIAN;
  if (name == "laplacian_tilde") return HS_MATRIX_LAPLACIAN_TILDE;
  return HS_MATRIX_ADJACENCY;
}

std::string number(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  int n = 0, r = 0;
  double p = 0.0;
  double budget = 1e7;
  std::string output;
};

void run_sample(const Globals& g, const SampleArgs& a) {
  hs_hypergraph* raw = nullptr;
  check(hs_hypergraph_sample(a.n, a.r, a.p, g.seed, a.budget, &raw));
  Hypergraph h(raw);
  size_t edges = 0;
  check(hs_hypergraph_edge_count(h.get(), &edges));
  const json diag = json::parse(take([&] {
    char* s = nullptr;
    check(hs_diagnostics(a.n, a.r, a.p, &s));
    return s;
  }()));
  const fs::path path = output_path(g, a.output, g.format == "json" ? "hypergraph.json" : "hypergraph.csv");
  if (g.format == "json") {
    check(hs_hypergraph_save(h.get(), path.string().c_str()));
  } else {
    std::vector<uint32_t> flat(edges * static_cast<size_t>(a.r));
    check(hs_hypergraph_edges(h.get(), flat.data(), flat.size()));
    std::ostringstream s;
    for (size_t e = 0; e < edges; ++e) {
      for (int k = 0; k < a.r; ++k) s << (k ? "," : "") << flat[e * a.r + k];
      s << '\n';
    }
    write_text(path, s.str());
  }
  std::cout << "edges " << edges << "\nd_avg " << number(diag["d_avg"].get<double>()) << "\nwrote "
            << path.string() << '\n';
}

// ---------------------------------------------------------------- spectrum

struct SpectrumArgs {
  std::string hypergraph;
  int n = 0, r = 0;
  double p = 0.5;
  std::string matrix = "gham";
  std::string scaling = "by_sqrt_n";
  std::string output;
  std::string svg;
  std::vector<std::string> overlays;
  int bins = 60;
  std::string title;
};

void run_spectrum(const Globals& g, const SpectrumArgs& a) {
  hs_matrix* raw = nullptr;
  if (!a.hypergraph.empty()) {
    hs_hypergraph* h = nullptr;
    check(hs_hypergraph_load(a.hypergraph.c_str(), &h));
    Hypergraph owned(h);
    check(hs_matrix_from_hypergraph(owned.get(), matrix_kind(a.matrix), &raw));
  } else {
    check(hs_matrix_surrogate(a.n, a.r, a.p, g.seed, matrix_kind(a.matrix), &raw));
  }
  Matrix m(raw);
  hs_spectrum* sraw = nullptr;
  check(hs_spectrum_compute(m.get(), a.scaling.c_str(), &sraw));
  Spectrum s(sraw);
  fs::path path;
  if (g.format == "json") {
    path = output_path(g, a.output, "spectrum.json");
    char* text = nullptr;
    check(hs_spectrum_to_json(s.get(), &text));
    write_text(path, take(text) + "\n");
  } else {
    path = output_path(g, a.output, "spectrum.csv");
    check(hs_spectrum_write_csv(s.get(), path.string().c_str()));
  }
  size_t size = 0;
  check(hs_spectrum_size(s.get(), &size));
  std::cout << "eigenvalues " << size << "\nwrote " << path.string() << '\n';
  if (!a.svg.empty()) {
    std::vector<LawHandle> laws;
    std::vector<const hs_law*> views;
    for (const auto& o : a.overlays) {
      laws.push_back(law_from_argument(o));
      views.push_back(laws.back().get());
    }
    char* svg = nullptr;
    check(hs_spectrum_svg(s.get(), views.data(), views.size(), a.bins, a.title.c_str(), &svg));
    const fs::path svg_path = output_path(g, a.svg, a.svg);
    write_text(svg_path, take(svg));
    std::cout << "wrote " << svg_path.string() << '\n';
  }
}

// ---------------------------------------------------------------- experiment

struct ExperimentArgs {
  std::string config;
  std::optional<std::string> kind, ensemble, matrix, scaling, regime;
  std::optional<int> n, r, trials, k, compare_n;
  std::optional<double> p, tolerance;
  bool dump_spectra = false;
};

void run_experiment(const Globals& g, const ExperimentArgs& a, bool seed_given, bool threads_given) {
  json config = {{"schema_version", 1}};
  if (!a.config.empty()) {
    try {
      config = json::parse(read_text(a.config));
    } catch (const json::exception& e) {
      throw Failure{HS_ERR_PARSE, "config file " + a.config + ": " + e.what()};
    }
  }
  auto set = [&](const char* key, const auto& value) {
    if (value) config[key] = *value;
  };
  set("kind", a.kind);
  set("ensemble", a.ensemble);
  set("matrix", a.matrix);
  set("scaling", a.scaling);
  set("regime", a.regime);
  set("n", a.n);
  set("r", a.r);
  set("p", a.p);
  set("trials", a.trials);
  set("k", a.k);
  set("compare_n", a.compare_n);
  set("tolerance", a.tolerance);
  if (a.dump_spectra) config["dump_spectra"] = true;
  if (seed_given || !config.contains("master_seed")) config["master_seed"] = g.seed;
  if (threads_given) config["threads"] = g.threads;

  const std::string root = g.out_dir.empty() ? "runs" : g.out_dir;
  char* text = nullptr;
  check(hs_experiment_run(config.dump().c_str(), root.c_str(),
                          g.timestamp.empty() ? nullptr : g.timestamp.c_str(), &text));
  const json record = json::parse(take(text));
  if (g.format == "json") {
    std::cout << record.dump(2) << '\n';
    return;
  }
  const json& cfg = record["config"];
  std::cout << "experiment " << cfg["kind"].get<std::string>() << "  n=" << cfg["n"] << " r=" << cfg["r"]
            << " p=" << number(cfg["p"].get<double>()) << " trials=" << cfg["trials"] << '\n';
  for (const auto& [key, value] : record["results"].items()) {
    if (value.is_primitive()) std::cout << "  " << key << " = " << value << '\n';
  }
  for (const auto& [key, agg] : record["aggregates"].items()) {
    std::cout << "  mean " << key << " = " << number(agg["mean"].get<double>());
    if (!agg["stderr"].is_null()) std::cout << " +- " << number(agg["stderr"].get<double>());
    std::cout << '\n';
  }
  for (const auto& c : record["checks"]) {
    std::cout << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << ": "
              << c["detail"].get<std::string>() << '\n';
  }
  std::cout << "record " << record["record_dir"].get<std::string>() << '\n';
}

// ---------------------------------------------------------------- laws

struct LawArgs {
  std::string law;
  std::string a, b;
  int grid_points = 2001;
  double lo = 0.0, hi = 0.0;
  int points = 201;
  std::string output;
};

void emit_law(const Globals& g, const LawHandle& law, const LawArgs& a) {
  char* csv = nullptr;
  check(hs_law_tabulate(law.get(), a.lo, a.hi, a.points, &csv));
  std::string table = take(csv);
  double mean = 0.0, variance = 0.0;
  check(hs_law_moments(law.get(), &mean, &variance));
  char* label = nullptr;
  check(hs_law_label(law.get(), &label));
  std::string text;
  if (g.format == "json") {
    json j = {{"label", take(label)}, {"mean", mean}, {"variance", variance}};
    std::istringstream rows(table);
    std::string line;
    std::getline(rows, line);
    json xs = json::array(), ds = json::array(), cs = json::array();
    while (std::getline(rows, line)) {
      double x = 0, d = 0, c = 0;
      if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &d, &c) == 3) {
        xs.push_back(x);
        ds.push_back(d);
        cs.push_back(c);
      }
    }
    j["x"] = xs;
    j["density"] = ds;
    j["cdf"] = cs;
    text = j.dump() + "\n";
  } else {
    take(label);
    text = table;
  }
  if (a.output.empty()) {
    std::cout << text;
  } else {
    const fs::path path = output_path(g, a.output, a.output);
    write_text(path, text);
    std::cout << "wrote " << path.string() << '\n';
  }
}

// ---------------------------------------------------------------- metrics

struct MetricArgs {
  std::string a, b;
};

// A metrics input is a spectrum CSV or a law descriptor (inline or file).
LawHandle law_from_input(const std::string& arg) {
  if (!arg.empty() && arg.front() != '{' && fs::path(arg).extension() == ".csv") {
    hs_spectrum* s = nullptr;
    check(hs_spectrum_read_csv(arg.c_str(), &s));
    Spectrum owned(s);
    hs_law* law = nullptr;
    check(hs_law_from_spectrum(owned.get(), &law));
    return LawHandle(law);
  }
  return law_from_argument(arg);
}

void run_metrics(const Globals& g, const MetricArgs& a) {
  const LawHandle x = law_from_input(a.a);
  const LawHandle y = law_from_input(a.b);
  char* text = nullptr;
  check(hs_metrics_compare(x.get(), y.get(), &text));
  const json report = json::parse(take(text));
  if (g.format == "json") {
    std::cout << report.dump() << '\n';
  } else {
    std::cout << "ks,w1,bl_upper\n"
              << std::setprecision(10) << report["ks"].get<double>() << ',' << report["w1"].get<double>() << ','
              << report["bl_upper"].get<double>() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random matrices from random hypergraphs: sampling, spectra, limit laws and experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for outputs");
  auto* threads_opt = app.add_option("--threads", g.threads, "Worker threads for experiments (0: all)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app.add_option("--timestamp", g.timestamp, "Fixed timestamp for record directories");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Sample an r-uniform hypergraph");
  sample_cmd->add_option("--n", sample.n, "Vertices")->required();
  sample_cmd->add_option("--r", sample.r, "Edge size")->required();
  sample_cmd->add_option("--p", sample.p, "Edge probability")->required();
  sample_cmd->add_option("--budget", sample.budget, "Maximum expected edge count");
  sample_cmd->add_option("-o,--output", sample.output, "Output file");

  SpectrumArgs spectrum;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Eigenvalues of the GHAM or a Laplacian");
  auto* hyper_opt = spectrum_cmd->add_option("--hypergraph", spectrum.hypergraph, "Hypergraph JSON file");
  auto* n_opt = spectrum_cmd->add_option("--n", spectrum.n, "Vertices (Gaussian surrogate)");
  spectrum_cmd->add_option("--r", spectrum.r, "Edge size (Gaussian surrogate)")->needs(n_opt);
  spectrum_cmd->add_option("--p", spectrum.p, "Edge probability (Gaussian surrogate)");
  hyper_opt->excludes(n_opt);
  spectrum_cmd->add_option("--matrix", spectrum.matrix)
      ->check(CLI::IsMember({"gham", "laplacian", "laplacian_tilde"}));
  spectrum_cmd->add_option("--scaling", spectrum.scaling)
      ->check(CLI::IsMember({"raw", "by_sqrt_n", "by_n", "by_sqrt_nr"}));
  spectrum_cmd->add_option("-o,--output", spectrum.output, "Eigenvalue file");
  spectrum_cmd->add_option("--svg", spectrum.svg, "Histogram SVG file");
  spectrum_cmd->add_option("--overlay", spectrum.overlays, "Law descriptor (JSON or file) drawn over the histogram");
  spectrum_cmd->add_option("--bins", spectrum.bins)->check(CLI::Range(5, 100000));
  spectrum_cmd->add_option("--title", spectrum.title);

  ExperimentArgs experiment;
  auto* experiment_cmd = app.add_subcommand("experiment", "Run a Monte Carlo experiment and record it");
  experiment_cmd->add_option("--config", experiment.config, "JSON config with schema_version");
  experiment_cmd->add_option("--kind", experiment.kind);
  experiment_cmd->add_option("--ensemble", experiment.ensemble);
  experiment_cmd->add_option("--matrix", experiment.matrix);
  experiment_cmd->add_option("--scaling", experiment.scaling);
  experiment_cmd->add_option("--regime", experiment.regime);
  experiment_cmd->add_option("--n", experiment.n);
  experiment_cmd->add_option("--r", experiment.r);
  experiment_cmd->add_option("--p", experiment.p);
  experiment_cmd->add_option("--trials", experiment.trials);
  experiment_cmd->add_option("--k", experiment.k);
  experiment_cmd->add_option("--compare-n", experiment.compare_n);
  experiment_cmd->add_option("--tolerance", experiment.tolerance);
  experiment_cmd->add_flag("--dump-spectra", experiment.dump_spectra);

  LawArgs laws;
  auto* laws_cmd = app.add_subcommand("laws", "Evaluate a limit law or a free convolution");
  laws_cmd->require_subcommand(1);
  auto* evaluate_cmd = laws_cmd->add_subcommand("evaluate", "Tabulate density and cdf of a law");
  evaluate_cmd->add_option("--law", laws.law, "Law descriptor (JSON or file)")->required();
  auto* convolve_cmd = laws_cmd->add_subcommand("convolve", "Free additive convolution of two laws");
  convolve_cmd->add_option("--a", laws.a, "First law descriptor")->required();
  convolve_cmd->add_option("--b", laws.b, "Second law descriptor")->required();
  convolve_cmd->add_option("--grid-points", laws.grid_points)->check(CLI::Range(3, 1000000));
  for (auto* cmd : {evaluate_cmd, convolve_cmd}) {
    cmd->add_option("--lo", laws.lo);
    cmd->add_option("--hi", laws.hi);
    cmd->add_option("--points", laws.points)->check(CLI::Range(2, 10000000));
    cmd->add_option("-o,--output", laws.output);
  }

  MetricArgs metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "Distances between two spectra or laws");
  metrics_cmd->add_option("--a", metrics.a, "Spectrum CSV or law descriptor")->required();
  metrics_cmd->add_option("--b", metrics.b, "Spectrum CSV or law descriptor")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << app.help();
    return 2;
  }

  try {
    if (sample_cmd->parsed()) {
      run_sample(g, sample);
    } else if (spectrum_cmd->parsed()) {
      if (spectrum.hypergraph.empty() && (spectrum.n == 0 || spectrum.r == 0)) {
        std::cerr << "spectrum: give --hypergraph FILE or --n and --r for the Gaussian surrogate\n";
        return 2;
      }
      run_spectrum(g, spectrum);
    } else if (experiment_cmd->parsed()) {
      run_experiment(g, experiment, seed_opt->count() > 0, threads_opt->count() > 0);
    } else if (evaluate_cmd->parsed()) {
      emit_law(g, law_from_argument(laws.law), laws);
    } else if (convolve_cmd->parsed()) {
      const json a = json::parse(laws.a.front() == '{' ? laws.a : read_text(laws.a));
      const json b = json::parse(laws.b.front() == '{' ? laws.b : read_text(laws.b));
      const json conv = {{"kind", "free_convolution"}, {"operands", {a, b}}, {"grid_points", laws.grid_points}};
      emit_law(g, law_from_argument(conv.dump()), laws);
    } else if (metrics_cmd->parsed()) {
      run_metrics(g, metrics);
    }
  } catch (const Failure& f) {
    std::cerr << "error (" << hs_status_name(f.status) << "): " << f.message << '\n';
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error (parse): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
