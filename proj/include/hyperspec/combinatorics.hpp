#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

namespace hyperspec {

class Rng;

using BigInt = mpz_class;
using Vertex = std::uint32_t;

/// Erdős–Rényi r-uniform hypergraph model on n vertices with hyperedge
/// inclusion probability p. Use make() to construct a validated instance.
struct ModelParams {
  int n = 0;
  int r = 0;
  double p = 0.0;

  static ModelParams make(int n, int r, double p);

  /// Number of possible hyperedges, C(n, r).
  BigInt total_edges() const;
  /// Number of hyperedges through a fixed vertex pair, C(n-2, r-2).
  BigInt pair_degree() const;
  double ratio() const { return static_cast<double>(r) / n; }
};

BigInt binomial_coefficient(long n, long k);

/// log C(n, k) via lgamma; adequate for magnitudes, not for exact work.
double log_binomial(double n, double k);

/// C(n, k) as a double, or +inf when it overflows.
double binomial_as_double(long n, long k);

/// Number of r-subsets of [n] meeting a fixed r-subset in exactly s vertices.
BigInt edge_overlap_count(long n, long r, long s);

/// Expected number of hyperedges containing a fixed vertex, C(n-1, r-1) p.
double average_degree(const ModelParams& params);

/// Calls fn on every r-subset of {1..n} in lexicographic order.
void for_each_combination(int n, int r, const std::function<void(std::span<const Vertex>)>& fn);

/// Hyperedges are stored flat with stride r; each is sorted ascending and the
/// edge list itself is in lexicographic order.
class HypergraphSample {
 public:
  HypergraphSample(ModelParams params, std::vector<Vertex> flat_edges, std::uint64_t seed);

  const ModelParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t edge_count() const { return flat_.size() / static_cast<std::size_t>(params_.r); }
  std::span<const Vertex> edge(std::size_t i) const;
  std::span<const Vertex> flat_edges() const { return flat_; }

 private:
  ModelParams params_;
  std::vector<Vertex> flat_;
  std::uint64_t seed_;
};

inline constexpr double kDefaultEdgeBudget = 1e7;

HypergraphSample sample_hypergraph(const ModelParams& params, std::uint64_t seed,
                                   double edge_budget = kDefaultEdgeBudget);

// Count samplers. Exposed for testing.
std::uint64_t sample_binomial_count(Rng& rng, std::uint64_t trials, double p);
std::uint64_t sample_poisson_count(Rng& rng, double mean);

nlohmann::json to_json(const HypergraphSample& sample);
HypergraphSample hypergraph_from_json(const nlohmann::json& j);
void save_hypergraph(const HypergraphSample& sample, const std::filesystem::path& path);
HypergraphSample load_hypergraph(const std::filesystem::path& path);

}  // namespace hyperspec
