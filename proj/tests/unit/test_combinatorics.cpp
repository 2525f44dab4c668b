#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "../support/oracles.hpp"
#include "hyperspec/combinatorics.hpp"
#include "hyperspec/errors.hpp"
#include "hyperspec/rng.hpp"

using namespace hyperspec;

TEST_CASE("binomial coefficients agree with a product oracle") {
  CHECK(binomial_coefficient(8, 2) == 28);
  CHECK(binomial_coefficient(17, 0) == 1);
  CHECK(binomial_coefficient(30, 15) == oracle::binomial_product(30, 15));
  CHECK(binomial_coefficient(30, 15) == 155117520);
  for (long n = 0; n <= 60; n += 7)
    for (long k = 0; k <= n; ++k) CHECK(binomial_coefficient(n, k) == oracle::binomial_product(n, k));
  CHECK_THROWS_AS(binomial_coefficient(5, 6), DomainError);
  CHECK_THROWS_AS(binomial_coefficient(5, -1), DomainError);
  // Large values stay exact.
  CHECK(binomial_coefficient(1000, 500) == oracle::binomial_product(1000, 500));
}

TEST_CASE("log_binomial matches the exact value") {
  for (long n : {10L, 100L, 500L}) {
    for (long k : {0L, 1L, n / 3, n / 2}) {
      const mpz_class b = oracle::binomial_product(n, k);
      const double expected = std::log(mpf_class(b, 256).get_d());
      CHECK(log_binomial(static_cast<double>(n), static_cast<double>(k)) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("model parameter validation") {
  CHECK_NOTHROW(ModelParams::make(6, 3, 0.5));
  CHECK_NOTHROW(ModelParams::make(2, 2, 0.0));
  CHECK_THROWS_AS(ModelParams::make(5, 1, 0.5), DomainError);
  CHECK_THROWS_AS(ModelParams::make(5, 6, 0.5), DomainError);
  CHECK_THROWS_AS(ModelParams::make(5, 3, 1.5), DomainError);
  CHECK_THROWS_AS(ModelParams::make(5, 3, -0.1), DomainError);
  const auto p = ModelParams::make(10, 4, 0.3);
  CHECK(p.total_edges() == 210);
  CHECK(p.pair_degree() == 28);
  CHECK(p.ratio() == doctest::Approx(0.4));
}

TEST_CASE("average degree") {
  CHECK(average_degree(ModelParams::make(20, 3, 0.1)) == doctest::Approx(17.1).epsilon(1e-14));
  CHECK(average_degree(ModelParams::make(20, 3, 0.0)) == 0.0);
  CHECK(average_degree(ModelParams::make(10, 2, 1.0)) == doctest::Approx(9.0));
  // C(1099, 549) overflows a double; the log-space path must still be accurate.
  const mpf_class exact = mpf_class(oracle::binomial_product(1099, 549), 4096) * mpf_class(1e-300, 4096);
  CHECK(average_degree(ModelParams::make(1100, 550, 1e-300)) == doctest::Approx(exact.get_d()).epsilon(1e-9));
}

TEST_CASE("edge overlap counts") {
  CHECK(edge_overlap_count(8, 3, 3) == 1);
  CHECK(edge_overlap_count(8, 3, 0) == 10);
  CHECK(edge_overlap_count(8, 3, 1) == 30);
  CHECK_THROWS_AS(edge_overlap_count(8, 3, 4), DomainError);

  // Brute force: count 3-subsets of {1..8} by overlap with {1,2,3}.
  std::map<int, long> counts;
  for (const auto& e : oracle::all_subsets(8, 3)) {
    int s = 0;
    for (int v : e) s += v <= 3;
    ++counts[s];
  }
  for (int s = 0; s <= 3; ++s) CHECK(edge_overlap_count(8, 3, s) == counts[s]);

  for (long n = 2; n <= 12; ++n) {
    for (long r = 2; r <= n; ++r) {
      BigInt total = 0;
      for (long s = 0; s <= r; ++s) total += edge_overlap_count(n, r, s);
      CHECK(total == binomial_coefficient(n, r));
    }
  }
}

TEST_CASE("for_each_combination enumerates lexicographically") {
  std::vector<std::vector<int>> seen;
  for_each_combination(6, 3, [&](std::span<const Vertex> e) { seen.emplace_back(e.begin(), e.end()); });
  CHECK(seen == oracle::all_subsets(6, 3));
}

namespace {

void check_valid(const HypergraphSample& h) {
  const int n = h.params().n, r = h.params().r;
  std::set<std::vector<Vertex>> unique;
  std::vector<Vertex> prev;
  for (std::size_t i = 0; i < h.edge_count(); ++i) {
    const auto e = h.edge(i);
    REQUIRE(static_cast<int>(e.size()) == r);
    for (std::size_t k = 0; k < e.size(); ++k) {
      CHECK(e[k] >= 1);
      CHECK(static_cast<int>(e[k]) <= n);
      if (k) CHECK(e[k - 1] < e[k]);
    }
    std::vector<Vertex> cur(e.begin(), e.end());
    if (i) CHECK(prev < cur);
    prev = cur;
    unique.insert(cur);
  }
  CHECK(unique.size() == h.edge_count());
}

}  // namespace

TEST_CASE("sampling extremes") {
  const auto full = sample_hypergraph(ModelParams::make(6, 3, 1.0), 42);
  CHECK(full.edge_count() == 20);
  check_valid(full);
  CHECK(sample_hypergraph(ModelParams::make(6, 3, 0.0), 42).edge_count() == 0);
}

TEST_CASE("sampling is reproducible and valid") {
  for (double p : {0.1, 0.5, 0.9}) {
    const auto params = ModelParams::make(12, 4, p);
    const auto a = sample_hypergraph(params, 7);
    const auto b = sample_hypergraph(params, 7);
    check_valid(a);
    CHECK(std::vector<Vertex>(a.flat_edges().begin(), a.flat_edges().end()) ==
          std::vector<Vertex>(b.flat_edges().begin(), b.flat_edges().end()));
  }
}

TEST_CASE("edge count follows Binomial(20, 0.5)") {
  const auto params = ModelParams::make(6, 3, 0.5);
  double sum = 0.0;
  const int seeds = 10000;
  for (int s = 0; s < seeds; ++s) sum += static_cast<double>(sample_hypergraph(params, derive_seed(99, s)).edge_count());
  // 4 sigma band for the mean of 10 000 Binomial(20, 1/2) counts.
  CHECK(std::abs(sum / seeds - 10.0) < 4.0 * std::sqrt(5.0 / seeds) + 1e-12);
  CHECK(std::abs(sum / seeds - 10.0) < 0.3);
}

TEST_CASE("every fixed hyperedge is included with probability p") {
  for (int n : {6, 8, 10}) {
    for (int r : {2, 3, 4}) {
      for (double p : {0.3, 0.7}) {
        const auto params = ModelParams::make(n, r, p);
        const auto subsets = oracle::all_subsets(n, r);
        std::map<std::vector<int>, int> hits;
        const int seeds = 2000;
        for (int s = 0; s < seeds; ++s) {
          const auto h = sample_hypergraph(params, derive_seed(1234 + n * 10 + r, s));
          for (std::size_t i = 0; i < h.edge_count(); ++i) {
            const auto e = h.edge(i);
            ++hits[std::vector<int>(e.begin(), e.end())];
          }
        }
        const double band = 4.0 * std::sqrt(p * (1 - p) / seeds);
        int violations = 0;
        for (const auto& e : subsets) violations += std::abs(hits[e] / double(seeds) - p) > band;
        // With up to 210 edges per case a handful of 4-sigma excursions would
        // already be suspicious; require none.
        CHECK_MESSAGE(violations == 0, "n=" << n << " r=" << r << " p=" << p);
      }
    }
  }
}

TEST_CASE("complement path is used for dense samples and stays uniform") {
  const auto params = ModelParams::make(9, 3, 0.85);
  std::map<std::vector<int>, int> hits;
  const int seeds = 3000;
  for (int s = 0; s < seeds; ++s) {
    const auto h = sample_hypergraph(params, derive_seed(5, s));
    check_valid(h);
    for (std::size_t i = 0; i < h.edge_count(); ++i) {
      const auto e = h.edge(i);
      ++hits[std::vector<int>(e.begin(), e.end())];
    }
  }
  const double band = 4.0 * std::sqrt(0.85 * 0.15 / seeds);
  for (const auto& e : oracle::all_subsets(9, 3)) CHECK(std::abs(hits[e] / double(seeds) - 0.85) < band);
}

TEST_CASE("budget guard names the surrogate") {
  const auto params = ModelParams::make(200, 50, 0.5);
  try {
    sample_hypergraph(params, 1);
    FAIL("expected a resource error");
  } catch (const ResourceError& e) {
    CHECK(std::string(e.what()).find("gaussian_surrogate") != std::string::npos);
  }
  CHECK_THROWS_AS(sample_hypergraph(ModelParams::make(30, 5, 0.5), 1, 100.0), ResourceError);
}

TEST_CASE("count samplers match their moments") {
  Rng rng(2024);
  for (auto [trials, p] : {std::pair<std::uint64_t, double>{50, 0.3}, {1000, 0.02}, {1000000, 0.5}}) {
    const int draws = 20000;
    double s = 0, ss = 0;
    for (int i = 0; i < draws; ++i) {
      const double x = static_cast<double>(sample_binomial_count(rng, trials, p));
      s += x;
      ss += x * x;
    }
    const double mean = s / draws, var = ss / draws - mean * mean;
    const double mu = trials * p, sigma2 = trials * p * (1 - p);
    CHECK(std::abs(mean - mu) < 4.0 * std::sqrt(sigma2 / draws));
    CHECK(var == doctest::Approx(sigma2).epsilon(0.05));
  }
  for (double mean_target : {0.5, 7.0, 300.0}) {
    const int draws = 20000;
    double s = 0;
    for (int i = 0; i < draws; ++i) s += static_cast<double>(sample_poisson_count(rng, mean_target));
    CHECK(std::abs(s / draws - mean_target) < 4.0 * std::sqrt(mean_target / draws));
  }
}

TEST_CASE("hypergraph JSON round trip and validation") {
  const auto h = sample_hypergraph(ModelParams::make(9, 3, 0.4), 11);
  const auto j = to_json(h);
  CHECK(j["n"] == 9);
  CHECK(j["r"] == 3);
  CHECK(j["seed"] == 11);
  const auto back = hypergraph_from_json(j);
  CHECK(back.edge_count() == h.edge_count());
  CHECK(to_json(back) == j);

  const auto dir = std::filesystem::temp_directory_path() / "hyperspec_combinatorics_test";
  std::filesystem::create_directories(dir);
  save_hypergraph(h, dir / "h.json");
  CHECK(to_json(load_hypergraph(dir / "h.json")) == j);

  auto bad = j;
  bad["edges"] = {{1, 2, 3}, {1, 2, 3}};
  CHECK_THROWS_AS(hypergraph_from_json(bad), ParseError);
  bad["edges"] = {{1, 2, 10}};
  CHECK_THROWS_AS(hypergraph_from_json(bad), ParseError);
  bad["edges"] = {{1, 2}};
  CHECK_THROWS_AS(hypergraph_from_json(bad), ParseError);
  bad["edges"] = {{3, 1, 2}, {1, 2, 4}};
  CHECK(hypergraph_from_json(bad).edge(0)[0] == 1);  // unsorted input is canonicalized
  CHECK_THROWS_AS(hypergraph_from_json(nlohmann::json{{"n", 5}}), ParseError);
  CHECK_THROWS_AS(load_hypergraph(dir / "missing.json"), IoError);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
  Rng a(3), b(3);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
  CHECK_THROWS(a.below(0));
}
