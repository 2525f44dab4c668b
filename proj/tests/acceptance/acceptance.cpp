// Prints one PASS/FAIL line per acceptance criterion and exits nonzero when
// any criterion fails. Experiment criteria go through the public runners;
// the exact suites compare against the independent oracles in tests/support.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../support/oracles.hpp"
#include "hyperspec/experiments.hpp"
#include "hyperspec/gham.hpp"
#include "hyperspec/laws.hpp"
#include "hyperspec/metrics.hpp"
#include "hyperspec/rng.hpp"
#include "hyperspec/spectra.hpp"

using namespace hyperspec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  std::ostringstream s;
  s.precision(5);
  s << x;
  return s.str();
}

ExperimentConfig config(ExperimentKind kind, int n, int r, int trials, std::uint64_t seed) {
  ExperimentConfig c;
  c.kind = kind;
  c.params = ModelParams{n, r, 0.5};
  c.trials = trials;
  c.master_seed = seed;
  return c;
}

const Check& find_check(const ExperimentRecord& rec, const std::string& prefix) {
  for (const auto& c : rec.checks)
    if (c.name.rfind(prefix, 0) == 0) return c;
  throw std::runtime_error("no check named " + prefix);
}

SymmetricMatrix from_dense(const oracle::Dense& d) {
  SymmetricMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i; j < d.size(); ++j) m.set(i, j, d[i][j]);
  return m;
}

std::vector<double> values(const SpectralSample& s) { return {s.eigenvalues().begin(), s.eigenvalues().end()}; }

double frob_diff(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k) s += std::pow(a.data()[k] - b.data()[k], 2);
  return std::sqrt(s);
}

Outcome bulk() {
  auto c = config(ExperimentKind::bulk, 500, 100, 20, 101);
  const auto t0 = std::chrono::steady_clock::now();
  const auto rec = run_experiment(c);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& ks = rec.checks.at(0);

  // Monotone improvement at fixed c = 0.2: mean per-trial KS over 10 reps.
  auto mean_ks = [](int n) {
    auto m = config(ExperimentKind::bulk, n, n / 5, 10, 202);
    m.limit_c = 0.2;
    return run_experiment(m).aggregates.at("ks").mean;
  };
  const double small = mean_ks(250), large = mean_ks(1000);
  const bool pass = ks.pass && seconds < 120.0 && large < small;
  return {pass, "ks=" + num(ks.observed) + " (<0.05), runtime " + num(seconds) + "s (<120), mean ks n=250 " +
                    num(small) + " > n=1000 " + num(large)};
}

Outcome universality() {
  auto c = config(ExperimentKind::universality, 200, 3, 30, 303);
  c.params.p = 0.3;
  c.ensemble = Ensemble::bernoulli_hypergraph;
  const auto rec = run_experiment(c);
  const auto& diff = find_check(rec, "|ks_bernoulli - ks_gaussian|");
  return {diff.pass, "|ks diff|=" + num(diff.observed) + " (<0.05); " + diff.name};
}

Outcome bbp() {
  bool pass = true;
  std::string detail;
  std::array<double, 2> mean{}, se{};
  int slot = 0;
  for (int r : {3, 4, 10}) {
    const auto rec = run_experiment(config(ExperimentKind::edge_bbp, 2000, r, 30, 404 + r));
    for (const auto& ch : rec.checks) pass = pass && ch.pass;
    detail += "r=" + std::to_string(r) + ": " + num(rec.checks[0].observed) + "/" + num(rec.checks[1].observed) +
              " vs +-" + num(rec.checks[0].target) + "; ";
    if (r != 10) {
      mean[slot] = rec.aggregates.at("lambda_max").mean;
      se[slot] = *rec.aggregates.at("lambda_max").stderr_;
      ++slot;
    }
  }
  const double jump = mean[1] - mean[0], pooled = std::sqrt(se[0] * se[0] + se[1] * se[1]);
  pass = pass && jump > 3 * pooled;
  return {pass, detail + "jump r=3->4 " + num(jump) + " vs 3*pooled stderr " + num(3 * pooled)};
}

Outcome edge_regime_i() {
  auto c = config(ExperimentKind::edge_regimes, 1000, 500, 200, 505);
  c.regime = "i";
  c.pushforward_draws = 100000;
  const auto rec = run_experiment(c);
  const auto& ch = rec.checks.at(0);
  return {ch.pass, "ks(lambda_1/n, pushforward)=" + num(ch.observed) + " (<0.1)"};
}

Outcome laplacian_bulk() {
  auto c = config(ExperimentKind::laplacian_bulk, 800, 3, 10, 606);
  c.matrix = MatrixKind::laplacian_tilde;
  c.regime = "fixed";
  const auto rec = run_experiment(c);
  const auto& ch = rec.checks.at(0);
  return {ch.pass, ch.name + "=" + num(ch.observed) + " (<0.06)"};
}

Outcome free_convolution() {
  const Law sc2 = Law::free_convolution(Law::semicircle(1.0), Law::semicircle(1.0));
  double sup = 0;
  for (std::size_t i = 0; i < sc2.grid()->x.size(); ++i)
    sup = std::max(sup, std::abs(sc2.grid()->f[i] - semicircle_density(2.0, sc2.grid()->x[i])));

  double ident = 0;
  for (const Law& mu : {Law::semicircle(1.0), Law::gaussian(0.7)}) {
    const Law conv = Law::free_convolution(mu, Law::point_mass(0.0));
    for (std::size_t i = 0; i < conv.grid()->x.size(); ++i)
      ident = std::max(ident, std::abs(conv.grid()->f[i] - mu.density(conv.grid()->x[i])));
  }

  const Law gs = Law::free_convolution(Law::gaussian(1.0), Law::semicircle(1.0));
  const double var_err = std::abs(gs.grid()->variance() - 2.0);
  return {sup < 1e-4 && ident < 1e-8 && var_err < 1e-3,
          "sup|sc1+sc1 - sc2|=" + num(sup) + " (<1e-4), delta0 identity " + num(ident) + " (<1e-8), |var-2|=" +
              num(var_err) + " (<1e-3)"};
}

Outcome closed_forms() {
  std::mt19937_64 gen(707);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);

  int low_rank_bad = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 6;
    const double alpha = u(gen), beta = u(gen), U = g(gen);
    std::vector<double> V(n);
    for (double& v : V) v = g(gen);
    oracle::Dense p(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) p[i][j] = alpha * U + beta * (V[i] + V[j]);
    const auto ref = oracle::jacobi_eigenvalues(p);
    const auto got = low_rank_eigenvalues(alpha, beta, U, V);
    const double scale = std::max(std::abs(ref.front()), std::abs(ref.back()));
    low_rank_bad += std::abs(got.lambda_max - ref.front()) > 1e-9 * scale;
    low_rank_bad += std::abs(got.lambda_min - ref.back()) > 1e-9 * scale;
  }

  long trace_bad = 0, trace_pairs = 0;
  for (int n = 2; n <= 8; ++n) {
    for (int r = 2; r <= std::min(n, 4); ++r) {
      const auto subsets = oracle::all_subsets(n, r);
      for (const auto& a : subsets) {
        const auto qa = oracle::edge_matrix(n, a);
        for (const auto& b : subsets) {
          const auto qb = oracle::edge_matrix(n, b);
          double tr = 0;
          for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) tr += qa[i][k] * qb[k][i];
          const std::vector<Vertex> va(a.begin(), a.end()), vb(b.begin(), b.end());
          trace_bad += trace_QQ(n, r, va, vb) != static_cast<long>(tr);
          ++trace_pairs;
        }
      }
    }
  }

  int lipschitz_bad = 0;
  {
    const int n = 8, r = 3;
    const auto k = lipschitz_constants(ModelParams::make(n, r, 0.5));
    const auto m = static_cast<std::size_t>(binomial_as_double(n, r));
    for (int t = 0; t < 500; ++t) {
      std::vector<double> x(m), y(m);
      double dist = 0;
      for (std::size_t l = 0; l < m; ++l) {
        x[l] = g(gen);
        y[l] = g(gen);
        dist += (x[l] - y[l]) * (x[l] - y[l]);
      }
      dist = std::sqrt(dist);
      const auto hx = gham_from_weights(n, r, x), hy = gham_from_weights(n, r, y);
      const double sq = std::sqrt(static_cast<double>(n));
      lipschitz_bad += frob_diff(hx, hy) / sq > std::sqrt(k.delta_sq) * dist * (1 + 1e-10);
      lipschitz_bad += frob_diff(laplacian(hx), laplacian(hy)) / sq > std::sqrt(k.gamma_sq) * dist * (1 + 1e-10);
      lipschitz_bad +=
          frob_diff(laplacian_tilde(hx, r), laplacian_tilde(hy, r)) / sq > std::sqrt(k.xi_sq) * dist * (1 + 1e-10);
    }
  }

  // Covariance bands over sampled hypergraphs: Var(XY) < 3 bounds each standard error.
  bool bands = true;
  std::string band_detail;
  {
    const auto params = ModelParams::make(8, 3, 0.4);
    const auto cov = covariance_params(params);
    const int trials = 20000;
    std::vector<double> x12(trials), x34(trials), x13(trials);
    for (int t = 0; t < trials; ++t) {
      const auto h = gham_from_adjacency(adjacency_from_hypergraph(sample_hypergraph(params, derive_seed(77, t))), params);
      x12[t] = h(0, 1);
      x34[t] = h(2, 3);
      x13[t] = h(0, 2);
    }
    auto covariance = [&](const std::vector<double>& a, const std::vector<double>& b) {
      double ma = 0, mb = 0;
      for (int t = 0; t < trials; ++t) {
        ma += a[t];
        mb += b[t];
      }
      ma /= trials;
      mb /= trials;
      double s = 0;
      for (int t = 0; t < trials; ++t) s += (a[t] - ma) * (b[t] - mb);
      return s / (trials - 1);
    };
    const double se = std::sqrt(3.0 / trials);
    const double dv = std::abs(covariance(x12, x12) - 1.0), dr = std::abs(covariance(x12, x34) - cov.rho),
                 dg = std::abs(covariance(x12, x13) - cov.gamma);
    bands = dv < 4 * se && dr < 4 * se && dg < 4 * se;
    band_detail = "cov deviations var " + num(dv) + ", rho " + num(dr) + ", gamma " + num(dg) + " vs 4se " + num(4 * se);
  }

  return {low_rank_bad == 0 && trace_bad == 0 && lipschitz_bad == 0 && bands,
          "rank-2 misses " + std::to_string(low_rank_bad) + "/200, trace_QQ misses " + std::to_string(trace_bad) + "/" +
              std::to_string(trace_pairs) + ", Lipschitz violations " + std::to_string(lipschitz_bad) + "/1500, " +
              band_detail};
}

Outcome inequalities() {
  std::mt19937_64 gen(808);
  int hw = 0, rank = 0, weyl = 0;
  for (int t = 0; t < 200; ++t) {
    {
      const int n = 10;
      const auto a = from_dense(oracle::random_symmetric(gen, n));
      const auto b = from_dense(oracle::random_symmetric(gen, n, 0.3 + 0.01 * t));
      const auto la = values(eigenvalues_symmetric(a)), lb = values(eigenvalues_symmetric(b));
      double w2 = 0;
      for (int i = 0; i < n; ++i) w2 += std::pow(la[i] - lb[i], 2) / n;
      hw += w2 > std::pow(frob_diff(a, b), 2) / n + 1e-10;
    }
    {
      const int n = 50, k = std::array{1, 2, 5}[t % 3];
      const auto a = from_dense(oracle::random_symmetric(gen, n));
      SymmetricMatrix p = a;
      std::normal_distribution<double> g(0, 2);
      for (int c = 0; c < k; ++c) {
        std::vector<double> u(n);
        for (double& x : u) x = g(gen);
        const double sign = c % 2 ? -1.0 : 1.0;
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) p.add(i, j, sign * u[i] * u[j]);
      }
      const double ks = ks_distance(Law::empirical(esd(eigenvalues_symmetric(a))),
                                    Law::empirical(esd(eigenvalues_symmetric(p))));
      rank += ks > double(k) / n + 1e-10;
    }
    {
      const int n = 20;
      const auto a = from_dense(oracle::random_symmetric(gen, n));
      const auto b = from_dense(oracle::random_symmetric(gen, n, 0.1 * (1 + t % 7)));
      SymmetricMatrix sum = a;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) sum.set(i, j, a(i, j) + b(i, j));
      const auto ls = values(eigenvalues_symmetric(sum)), la = values(eigenvalues_symmetric(a));
      const auto lb = values(eigenvalues_symmetric(b));
      const double bound = std::max(std::abs(lb.front()), std::abs(lb.back()));
      for (int i = 0; i < n; ++i) weyl += std::abs(ls[i] - la[i]) > bound + 1e-10;
    }
  }
  return {hw == 0 && rank == 0 && weyl == 0, "violations: Hoffman-Wielandt " + std::to_string(hw) + ", rank " +
                                                 std::to_string(rank) + ", Weyl " + std::to_string(weyl)};
}

Outcome concentration() {
  auto c = config(ExperimentKind::concentration, 200, 3, 200, 909);
  c.compare_n = 400;
  const auto rec = run_experiment(c);
  if (rec.checks.empty()) return {false, "no spread available"};
  const auto& ch = rec.checks.at(0);
  return {ch.pass, "std ratio " + num(ch.observed) + " (in [0.3, 0.7])"};
}

Outcome laplacian_edge() {
  auto c = config(ExperimentKind::laplacian_edge, 1000, 200, 50, 1010);
  c.regime = "A";
  const auto rec = run_experiment(c);
  const auto& ch = rec.checks.at(0);
  return {ch.pass, ch.name + "=" + num(ch.observed) + " vs " + num(ch.target) + " (+-0.08)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"bulk semicircle limit", bulk},
      {"universality Bernoulli vs Gaussian", universality},
      {"BBP edge transition", bbp},
      {"edge regime (i) pushforward", edge_regime_i},
      {"Laplacian bulk free convolution", laplacian_bulk},
      {"free convolution solver", free_convolution},
      {"closed-form oracles", closed_forms},
      {"inequality suites", inequalities},
      {"concentration scaling", concentration},
      {"Laplacian edge centering (A)", laplacian_edge},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
