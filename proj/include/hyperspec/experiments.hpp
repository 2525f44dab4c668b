#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperspec/combinatorics.hpp"
#include "hyperspec/gham.hpp"
#include "hyperspec/laws.hpp"
#include "hyperspec/spectra.hpp"

namespace hyperspec {

enum class ExperimentKind {
  bulk,
  laplacian_bulk,
  edge_bbp,
  edge_regimes,
  laplacian_edge,
  concentration,
  universality,
  diagnostics,
};

enum class Ensemble { bernoulli_hypergraph, gaussian_surrogate };
enum class MatrixKind { gham, laplacian, laplacian_tilde };

const char* to_string(ExperimentKind k) noexcept;
const char* to_string(Ensemble e) noexcept;
const char* to_string(MatrixKind m) noexcept;
ExperimentKind experiment_kind_from_string(const std::string& s);
Ensemble ensemble_from_string(const std::string& s);
MatrixKind matrix_kind_from_string(const std::string& s);

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::bulk;
  ModelParams params{500, 100, 0.5};
  int trials = 20;
  std::uint64_t master_seed = 1;
  Ensemble ensemble = Ensemble::gaussian_surrogate;
  MatrixKind matrix = MatrixKind::gham;
  std::optional<Scaling> scaling;
  int k = 1;
  // edge_regimes: "i", "ii", "iv". laplacian_edge: "A", "B_i", "B_ii", "C_i",
  // "C_ii". laplacian_bulk: "fixed" or "growing" (default picks by r vs log n).
  std::string regime;
  std::optional<double> tolerance;
  int threads = 0;  // 0: one per hardware thread
  double edge_budget = kDefaultEdgeBudget;
  int pushforward_draws = 100000;
  bool dump_spectra = false;
  // Side conditions "a << b" require a/b <= factor, "a >> b" require a/b >= 1/factor.
  double regime_factor = 0.2;
  // Bulk reference uses this c instead of r/n when set.
  std::optional<double> limit_c;
  // concentration: second size (default 2n) and whether r scales with n.
  std::optional<int> compare_n;
  bool scale_r_with_n = false;
  double ratio_low = 0.3;
  double ratio_high = 0.7;
  // diagnostics thresholds.
  double dense_threshold = 0.1;
  double sparsity_threshold = 1.0;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Requires "schema_version" == 1; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Applies the keys present in `overrides` on top of `base`.
ExperimentConfig merge_config(const ExperimentConfig& base, const nlohmann::json& overrides);

struct TrialSummary {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> values;
};

struct Aggregate {
  std::size_t count = 0;
  double mean = 0.0;
  std::optional<double> std;      // sample standard deviation, absent below 2 trials
  std::optional<double> stderr_;  // std / sqrt(count)
};

/// Aggregates every key present in all rows, folding in index order.
std::map<std::string, Aggregate> aggregate_trials(const std::vector<TrialSummary>& rows);

struct Check {
  std::string name;
  double observed = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct ExperimentRecord {
  ExperimentConfig config;
  std::vector<TrialSummary> trials;
  std::map<std::string, Aggregate> aggregates;
  nlohmann::json results = nlohmann::json::object();
  std::vector<Check> checks;
  double wall_seconds = 0.0;
  std::vector<std::string> artifacts;
  std::vector<SpectralSample> spectra;  // only with dump_spectra

  bool passed() const;
};

nlohmann::json to_json(const ExperimentRecord& r);

/// Writes record.json (and trial spectra when dumped) under
/// root/<kind>/<timestamp>-<seed>/. An empty timestamp means the current UTC time.
std::filesystem::path persist_record(ExperimentRecord& record, const std::filesystem::path& root,
                                     const std::string& timestamp = {});

// Runners. Each validates its configuration and throws ConfigError on
// inconsistent settings.
ExperimentRecord run_bulk(const ExperimentConfig& c);
ExperimentRecord run_universality(const ExperimentConfig& c);
ExperimentRecord run_laplacian_bulk(const ExperimentConfig& c);
ExperimentRecord run_edge_bbp(const ExperimentConfig& c);
ExperimentRecord run_edge_regimes(const ExperimentConfig& c);
ExperimentRecord run_laplacian_edge(const ExperimentConfig& c);
ExperimentRecord run_concentration(const ExperimentConfig& c);
ExperimentRecord run_diagnostics(const ExperimentConfig& c);
ExperimentRecord run_experiment(const ExperimentConfig& c);

/// Limit of lambda_1 / sqrt(n) for fixed r: sqrt(r-2) + 1/sqrt(r-2) if r >= 4, else 2.
double bbp_edge_limit(int r);

/// (c/2) z + sqrt((c^2/4) z^2 + c(1-c)).
double edge_regime_functional(double c, double zeta);

enum class EntryKind { bernoulli, gaussian };

/// Right-hand side of the resolvent universality bound for n^{-1/2} H.
double universality_bound(const ModelParams& params, std::complex<double> z, double K,
                          EntryKind entries);

struct DiagnosticsReport {
  double K_n = 0.0;        // sqrt(nN) / r^4
  double K_prime_n = 0.0;  // sqrt(nN) / r^{5/2}
  double d_avg = 0.0;
  double d_avg_over_r7 = 0.0;
  double d_avg_over_r4 = 0.0;
  bool dense = false;
  bool adjacency_sparsity_ok = false;  // d_avg / r^7 >= threshold
  bool laplacian_sparsity_ok = false;  // d_avg / r^4 >= threshold
};

DiagnosticsReport assumption_diagnostics(const ModelParams& params, double dense_threshold = 0.1,
                                         double sparsity_threshold = 1.0);
nlohmann::json to_json(const DiagnosticsReport& d);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must be
/// written by index; the first failure (lowest index) is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace hyperspec
