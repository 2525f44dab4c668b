#include "hyperspec/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "hyperspec/errors.hpp"
#include "hyperspec/rng.hpp"

namespace hyperspec {

ModelParams ModelParams::make(int n, int r, double p) {
  if (r < 2 || r > n) {
    throw DomainError("model params: need 2 <= r <= n, got n=" + std::to_string(n) +
                      " r=" + std::to_string(r));
  }
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("model params: p must lie in [0, 1]");
  return ModelParams{n, r, p};
}

BigInt ModelParams::total_edges() const { return binomial_coefficient(n, r); }

BigInt ModelParams::pair_degree() const { return binomial_coefficient(n - 2, r - 2); }

BigInt binomial_coefficient(long n, long k) {
  if (n < 0 || k < 0 || k > n) {
    throw DomainError("binomial_coefficient: need 0 <= k <= n, got n=" + std::to_string(n) +
                      " k=" + std::to_string(k));
  }
  BigInt out;
  mpz_bin_uiui(out.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return out;
}

double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double binomial_as_double(long n, long k) {
  const BigInt b = binomial_coefficient(n, k);
  if (mpz_sizeinbase(b.get_mpz_t(), 2) > 1023) return std::numeric_limits<double>::infinity();
  return b.get_d();
}

BigInt edge_overlap_count(long n, long r, long s) {
  if (s < 0 || s > r || r > n) {
    throw DomainError("edge_overlap_count: need 0 <= s <= r <= n");
  }
  if (r - s > n - r) return BigInt(0);
  return binomial_coefficient(r, s) * binomial_coefficient(n - r, r - s);
}

double average_degree(const ModelParams& params) {
  if (params.p == 0.0) return 0.0;
  const double degree = binomial_as_double(params.n - 1, params.r - 1);
  if (std::isfinite(degree)) return degree * params.p;
  return std::exp(log_binomial(params.n - 1, params.r - 1) + std::log(params.p));
}

void for_each_combination(int n, int r, const std::function<void(std::span<const Vertex>)>& fn) {
  if (r < 0 || r > n) throw DomainError("for_each_combination: need 0 <= r <= n");
  std::vector<Vertex> c(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) c[i] = static_cast<Vertex>(i + 1);
  for (;;) {
    fn(c);
    int i = r - 1;
    while (i >= 0 && c[i] == static_cast<Vertex>(n - r + 1 + i)) --i;
    if (i < 0) return;
    ++c[i];
    for (int j = i + 1; j < r; ++j) c[j] = c[j - 1] + 1;
  }
}

HypergraphSample::HypergraphSample(ModelParams params, std::vector<Vertex> flat_edges,
                                   std::uint64_t seed)
    : params_(params), flat_(std::move(flat_edges)), seed_(seed) {
  if (flat_.size() % static_cast<std::size_t>(params_.r) != 0) {
    throw DomainError("hypergraph: flat edge storage is not a multiple of r");
  }
}

std::span<const Vertex> HypergraphSample::edge(std::size_t i) const {
  const auto r = static_cast<std::size_t>(params_.r);
  return std::span<const Vertex>(flat_).subspan(i * r, r);
}

namespace {

constexpr double kLnSqrt2Pi = 0.918938533204672741780329736406;

// Error of Stirling's approximation to log(n!), after Loader (2000).
double stirling_error(double n) {
  constexpr double s0 = 1.0 / 12, s1 = 1.0 / 360, s2 = 1.0 / 1260, s3 = 1.0 / 1680,
                   s4 = 1.0 / 1188;
  if (n <= 15.0) return std::lgamma(n + 1.0) - (n + 0.5) * std::log(n) + n - kLnSqrt2Pi;
  const double nn = n * n;
  if (n > 500) return (s0 - s1 / nn) / n;
  if (n > 80) return (s0 - (s1 - s2 / nn) / nn) / n;
  if (n > 35) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
  return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// Deviance term x log(x/m) + m - x, evaluated stably near x == m.
double deviance(double x, double m) {
  if (std::abs(x - m) < 0.1 * (x + m)) {
    double v = (x - m) / (x + m);
    double s = (x - m) * v;
    double ej = 2.0 * x * v;
    v *= v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      const double next = s + ej / (2 * j + 1);
      if (next == s) return next;
      s = next;
    }
    return s;
  }
  return x * std::log(x / m) + m - x;
}

double binomial_pmf(double x, double trials, double p) {
  const double q = 1.0 - p;
  if (x == 0.0) return std::exp(trials * std::log1p(-p));
  if (x == trials) return std::exp(trials * std::log(p));
  const double lc = stirling_error(trials) - stirling_error(x) - stirling_error(trials - x) -
                    deviance(x, trials * p) - deviance(trials - x, trials * q);
  const double lf = 2.0 * kLnSqrt2Pi + std::log(x) + std::log1p(-x / trials);
  return std::exp(lc - 0.5 * lf);
}

double poisson_pmf(double x, double mean) {
  if (x == 0.0) return std::exp(-mean);
  return std::exp(-stirling_error(x) - deviance(x, mean) - kLnSqrt2Pi - 0.5 * std::log(x));
}

// Inversion by sequential search outward from the mode. `down`/`up` map the
// pmf at k to the pmf at k-1 / k+1.
template <typename Down, typename Up>
std::uint64_t search_from_mode(Rng& rng, std::uint64_t mode, std::uint64_t max_value,
                               double mode_mass, Down down, Up up) {
  double u = rng.uniform() - mode_mass;
  if (u <= 0.0) return mode;
  std::uint64_t lo = mode, hi = mode;
  double f_lo = mode_mass, f_hi = mode_mass;
  for (;;) {
    bool moved = false;
    if (lo > 0 && f_lo > 0.0) {
      f_lo = down(f_lo, lo);
      --lo;
      moved = true;
      u -= f_lo;
      if (u <= 0.0) return lo;
    }
    if (hi < max_value && f_hi > 0.0) {
      f_hi = up(f_hi, hi);
      ++hi;
      moved = true;
      u -= f_hi;
      if (u <= 0.0) return hi;
    }
    // Remaining mass below double resolution.
    if (!moved) return mode;
  }
}

}  // namespace

std::uint64_t sample_binomial_count(Rng& rng, std::uint64_t trials, double p) {
  if (p <= 0.0 || trials == 0) return 0;
  if (p >= 1.0) return trials;
  const double t = static_cast<double>(trials);
  const double ratio = p / (1.0 - p);
  auto mode = static_cast<std::uint64_t>(std::floor((t + 1.0) * p));
  mode = std::min(mode, trials);
  const double mass = binomial_pmf(static_cast<double>(mode), t, p);
  return search_from_mode(
      rng, mode, trials, mass,
      [&](double f, std::uint64_t k) {
        const double kd = static_cast<double>(k);
        return f * kd / (t - kd + 1.0) / ratio;
      },
      [&](double f, std::uint64_t k) {
        const double kd = static_cast<double>(k);
        return f * (t - kd) / (kd + 1.0) * ratio;
      });
}

std::uint64_t sample_poisson_count(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  const auto mode = static_cast<std::uint64_t>(std::floor(mean));
  const double mass = poisson_pmf(static_cast<double>(mode), mean);
  return search_from_mode(
      rng, mode, std::numeric_limits<std::uint64_t>::max(), mass,
      [&](double f, std::uint64_t k) { return f * static_cast<double>(k) / mean; },
      [&](double f, std::uint64_t k) { return f * mean / static_cast<double>(k + 1); });
}

namespace {

// Edges live in a flat arena; the hash set stores edge indices.
class EdgeSet {
 public:
  explicit EdgeSet(std::size_t r)
      : r_(r), set_(16, Hash{this}, Equal{this}) {}

  std::vector<Vertex>& arena() { return arena_; }

  // Tries to keep the edge just appended to the arena; drops it if present.
  bool commit_last() {
    const std::size_t index = arena_.size() / r_ - 1;
    if (set_.insert(index).second) return true;
    arena_.resize(arena_.size() - r_);
    return false;
  }

  bool contains(std::span<const Vertex> e) {
    arena_.insert(arena_.end(), e.begin(), e.end());
    const std::size_t index = arena_.size() / r_ - 1;
    const bool found = set_.find(index) != set_.end();
    arena_.resize(arena_.size() - r_);
    return found;
  }

  std::size_t size() const { return set_.size(); }

 private:
  std::span<const Vertex> at(std::size_t i) const {
    return std::span<const Vertex>(arena_).subspan(i * r_, r_);
  }

  struct Hash {
    const EdgeSet* self;
    std::size_t operator()(std::size_t i) const {
      std::uint64_t h = 0x84222325CBF29CE4ULL;
      for (Vertex v : self->at(i)) {
        h ^= v;
        h *= 0x100000001B3ULL;
      }
      return static_cast<std::size_t>(h ^ (h >> 29));
    }
  };
  struct Equal {
    const EdgeSet* self;
    bool operator()(std::size_t a, std::size_t b) const {
      const auto ea = self->at(a);
      const auto eb = self->at(b);
      return std::equal(ea.begin(), ea.end(), eb.begin());
    }
  };

  std::size_t r_;
  std::vector<Vertex> arena_;
  std::unordered_set<std::size_t, Hash, Equal> set_;
};

// Floyd's algorithm: appends a uniform r-subset of {1..n}, sorted, to out.
void append_random_subset(Rng& rng, int n, int r, std::vector<char>& marks,
                          std::vector<Vertex>& out) {
  const std::size_t start = out.size();
  for (int j = n - r + 1; j <= n; ++j) {
    const auto t = static_cast<int>(1 + rng.below(static_cast<std::uint64_t>(j)));
    const int pick = marks[t] ? j : t;
    marks[pick] = 1;
    out.push_back(static_cast<Vertex>(pick));
  }
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(start), out.end());
  for (std::size_t i = start; i < out.size(); ++i) marks[out[i]] = 0;
}

std::vector<Vertex> sorted_lexicographic(std::vector<Vertex> flat, std::size_t r) {
  const std::size_t count = flat.size() / r;
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(flat.begin() + a * r, flat.begin() + (a + 1) * r,
                                        flat.begin() + b * r, flat.begin() + (b + 1) * r);
  });
  std::vector<Vertex> out;
  out.reserve(flat.size());
  for (std::size_t i : order) out.insert(out.end(), flat.begin() + i * r, flat.begin() + (i + 1) * r);
  return out;
}

constexpr std::uint64_t kExactCountLimit = std::uint64_t{1} << 53;
constexpr double kGaussianCountVariance = 1e6;

}  // namespace

HypergraphSample sample_hypergraph(const ModelParams& raw, std::uint64_t seed, double edge_budget) {
  const ModelParams params = ModelParams::make(raw.n, raw.r, raw.p);
  const auto r = static_cast<std::size_t>(params.r);
  if (params.p == 0.0) return HypergraphSample(params, {}, seed);

  const double log_total = log_binomial(params.n, params.r);
  const double expected = std::exp(log_total + std::log(params.p));
  if (expected > edge_budget) {
    std::ostringstream msg;
    msg << "expected edge count " << expected << " exceeds the sampling budget " << edge_budget
        << "; use the gaussian_surrogate ensemble for this (n, r, p)";
    throw ResourceError(msg.str());
  }

  Rng rng(seed);
  const BigInt total = params.total_edges();
  const bool exact = total <= BigInt(static_cast<unsigned long>(kExactCountLimit));
  std::uint64_t count = 0;
  std::uint64_t total_u64 = 0;
  if (exact) {
    total_u64 = total.get_ui();
    count = sample_binomial_count(rng, total_u64, params.p);
  } else if (expected * (1.0 - params.p) > kGaussianCountVariance) {
    const double draw = expected + std::sqrt(expected * (1.0 - params.p)) * rng.normal();
    count = static_cast<std::uint64_t>(std::max(0.0, std::llround(draw) * 1.0));
  } else {
    count = sample_poisson_count(rng, expected);
  }
  if (count == 0) return HypergraphSample(params, {}, seed);

  std::vector<char> marks(static_cast<std::size_t>(params.n) + 1, 0);
  EdgeSet chosen(r);

  if (exact && count > total_u64 / 2) {
    // Draw the excluded edges and keep the rest.
    const std::uint64_t excluded = total_u64 - count;
    while (chosen.size() < excluded) {
      append_random_subset(rng, params.n, params.r, marks, chosen.arena());
      chosen.commit_last();
    }
    std::vector<Vertex> flat;
    flat.reserve(count * r);
    for_each_combination(params.n, params.r, [&](std::span<const Vertex> e) {
      if (excluded == 0 || !chosen.contains(e)) flat.insert(flat.end(), e.begin(), e.end());
    });
    return HypergraphSample(params, std::move(flat), seed);
  }

  while (chosen.size() < count) {
    append_random_subset(rng, params.n, params.r, marks, chosen.arena());
    chosen.commit_last();
  }
  return HypergraphSample(params, sorted_lexicographic(std::move(chosen.arena()), r), seed);
}

nlohmann::json to_json(const HypergraphSample& sample) {
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t i = 0; i < sample.edge_count(); ++i) {
    const auto e = sample.edge(i);
    edges.push_back(std::vector<Vertex>(e.begin(), e.end()));
  }
  return nlohmann::json{{"n", sample.params().n},
                        {"r", sample.params().r},
                        {"p", sample.params().p},
                        {"seed", sample.seed()},
                        {"edges", std::move(edges)}};
}

HypergraphSample hypergraph_from_json(const nlohmann::json& j) {
  try {
    const auto params = ModelParams::make(j.at("n").get<int>(), j.at("r").get<int>(),
                                          j.at("p").get<double>());
    const auto seed = j.value("seed", std::uint64_t{0});
    const auto r = static_cast<std::size_t>(params.r);
    std::vector<Vertex> flat;
    for (const auto& e : j.at("edges")) {
      auto vs = e.get<std::vector<Vertex>>();
      if (vs.size() != r) throw ParseError("hypergraph: edge with wrong size");
      std::sort(vs.begin(), vs.end());
      if (vs.front() < 1 || vs.back() > static_cast<Vertex>(params.n) ||
          std::adjacent_find(vs.begin(), vs.end()) != vs.end()) {
        throw ParseError("hypergraph: edge vertices must be distinct and within [1, n]");
      }
      flat.insert(flat.end(), vs.begin(), vs.end());
    }
    flat = sorted_lexicographic(std::move(flat), r);
    for (std::size_t i = 1; i < flat.size() / r; ++i) {
      if (std::equal(flat.begin() + (i - 1) * r, flat.begin() + i * r, flat.begin() + i * r)) {
        throw ParseError("hypergraph: duplicate edge");
      }
    }
    return HypergraphSample(params, std::move(flat), seed);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("hypergraph JSON: ") + e.what());
  } catch (const DomainError& e) {
    throw ParseError(std::string("hypergraph JSON: ") + e.what());
  }
}

void save_hypergraph(const HypergraphSample& sample, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_json(sample).dump() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

HypergraphSample load_hypergraph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return hypergraph_from_json(j);
}

}  // namespace hyperspec
