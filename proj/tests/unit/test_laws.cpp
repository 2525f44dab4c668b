#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "../support/oracles.hpp"
#include "hyperspec/errors.hpp"
#include "hyperspec/gham.hpp"
#include "hyperspec/laws.hpp"
#include "hyperspec/metrics.hpp"
#include "hyperspec/rng.hpp"

using namespace hyperspec;
using cd = std::complex<double>;
using std::numbers::pi;

namespace {

// Shared across test cases; each convolution costs a couple of seconds.
const Law& sc_sc() {
  static const Law law = Law::free_convolution(Law::semicircle(1.0), Law::semicircle(1.0));
  return law;
}
const Law& g_sc() {
  static const Law law = Law::free_convolution(Law::gaussian(1.0), Law::semicircle(1.0));
  return law;
}

cd quadrature_stieltjes_gaussian(double sigma2, cd z) {
  const double s = std::sqrt(sigma2);
  auto re = [&](double x) { return (oracle::normal_pdf(x / s) / s * (1.0 / (x - z))).real(); };
  auto im = [&](double x) { return (oracle::normal_pdf(x / s) / s * (1.0 / (x - z))).imag(); };
  return {oracle::integrate(re, -14 * s, 14 * s), oracle::integrate(im, -14 * s, 14 * s)};
}

}  // namespace

TEST_CASE("Catalan numbers") {
  CHECK(catalan(0) == 1);
  CHECK(catalan(3) == 5);
  CHECK(catalan(10) == 16796);
  // Dyck paths of length 2k by brute force.
  for (int k = 0; k <= 10; ++k) {
    long count = 0;
    for (long mask = 0; mask < (1L << (2 * k)); ++mask) {
      int h = 0;
      bool ok = true;
      for (int i = 0; i < 2 * k && ok; ++i) {
        h += (mask >> i) & 1 ? 1 : -1;
        ok = h >= 0;
      }
      count += ok && h == 0;
    }
    CHECK(catalan(k) == count);
  }
  CHECK_THROWS_AS(catalan(-1), DomainError);
}

TEST_CASE("semicircle closed forms") {
  CHECK(semicircle_density(1.0, 0.0) == doctest::Approx(1.0 / pi).epsilon(1e-15));
  CHECK(semicircle_density(1.0, 2.0) == 0.0);
  CHECK(semicircle_density(1.0, -2.0) == 0.0);
  CHECK(semicircle_density(1.0, 2.5) == 0.0);
  CHECK(semicircle_density(0.64, 0.0) == doctest::Approx(0.397887).epsilon(1e-6));
  CHECK_THROWS_AS(semicircle_density(0.0, 0.0), DomainError);
  CHECK_THROWS_AS(semicircle_density(-1.0, 0.0), DomainError);

  for (double s2 : {0.25, 1.0, 4.0}) {
    const double e = 2 * std::sqrt(s2);
    const int pts = 10000;
    double mass = 0;
    for (int i = 0; i < pts; ++i) {
      const double a = -e + 2 * e * i / pts, b = -e + 2 * e * (i + 1) / pts;
      mass += 0.5 * (b - a) * (semicircle_density(s2, a) + semicircle_density(s2, b));
    }
    CHECK(std::abs(mass - 1.0) < 1e-5);  // trapezoid error at the square-root endpoints
    const double mass_q = oracle::integrate([&](double x) { return semicircle_density(s2, x); }, -e, e, 1e-12);
    CHECK(std::abs(mass_q - 1.0) < 1e-6);
    for (double x : {-e, -0.3 * e, 0.0, 0.7 * e, e}) {
      const double q = oracle::integrate([&](double t) { return semicircle_density(s2, t); }, -e, x, 1e-12);
      CHECK(semicircle_cdf(s2, x) == doctest::Approx(q).epsilon(1e-6));
    }
  }

  CHECK(semicircle_moment(1.0, 4) == doctest::Approx(2.0));
  CHECK(semicircle_moment(3.0, 5) == 0.0);
  const double m2 = oracle::integrate([](double x) { return x * x * semicircle_density(4.0, x); }, -4, 4, 1e-12);
  CHECK(semicircle_moment(4.0, 2) == doctest::Approx(4.0));
  CHECK(m2 == doctest::Approx(4.0).epsilon(1e-6));
  for (int k = 0; k <= 5; ++k)
    CHECK(semicircle_moment(2.0, 2 * k) == doctest::Approx(std::pow(2.0, k) * catalan(k).get_d()));
}

TEST_CASE("semicircle Stieltjes transform") {
  const cd s = stieltjes_semicircle(1.0, cd(0, 1));
  CHECK(s.real() == doctest::Approx(0.0).scale(1.0));
  CHECK(s.imag() == doctest::Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-14));
  const cd far(3e3, 1e4);
  CHECK(std::abs(stieltjes_semicircle(1.0, far) + 1.0 / far) < 1e-6 * std::abs(1.0 / far));
  for (int i = 0; i < 100; ++i) {
    const double s2 = 0.3 + 0.05 * i;
    const cd z(-5.0 + 0.1 * i, 0.01 + 0.03 * (i % 17));
    const cd v = stieltjes_semicircle(s2, z);
    CHECK(std::abs(s2 * v * v + z * v + 1.0) < 1e-12 * (1 + std::abs(z)));
    CHECK(std::abs(v - 1.0 / (-z - s2 * v)) < 1e-12 * (1 + std::abs(v)));
    CHECK(v.imag() > 0.0);
  }
  CHECK_THROWS_AS(stieltjes_semicircle(1.0, cd(0, 0)), DomainError);
}

TEST_CASE("Gaussian Stieltjes transform through the Faddeeva function") {
  const cd v = stieltjes_gaussian(1.0, cd(0, 1));
  CHECK(std::abs(v.real()) < 1e-14);
  CHECK(v.imag() == doctest::Approx(0.655680).epsilon(1e-6));
  CHECK(std::abs(v - quadrature_stieltjes_gaussian(1.0, cd(0, 1))) < 1e-10);
  CHECK(std::abs(stieltjes_gaussian(1.0, cd(1, 1)) - quadrature_stieltjes_gaussian(1.0, cd(1, 1))) < 1e-8);
  for (cd z : {cd(-2.5, 0.4), cd(0.3, 0.05), cd(4, 2)})
    CHECK(std::abs(stieltjes_gaussian(1.7, z) - quadrature_stieltjes_gaussian(1.7, z)) < 1e-8);
  const cd far(0, 1e4);
  CHECK(std::abs(stieltjes_gaussian(1.0, far) + 1.0 / far) < 1e-6 * std::abs(1.0 / far));
  for (double s2 : {0.2, 1.0, 9.0}) {
    const double s = std::sqrt(s2);
    for (cd z : {cd(0.1, 0.2), cd(-3, 1), cd(12, 0.5), cd(40, 30)}) {
      const cd lhs = stieltjes_gaussian(s2, z), rhs = stieltjes_gaussian(1.0, z / s) / s;
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(rhs));
    }
  }
  std::mt19937_64 gen(6);
  std::normal_distribution<double> g(0, 5);
  for (int i = 0; i < 300; ++i) CHECK(stieltjes_gaussian(1.3, cd(g(gen), std::abs(g(gen)) + 1e-8)).imag() > 0.0);
  CHECK_THROWS_AS(stieltjes_gaussian(1.0, cd(1, -1)), DomainError);
}

TEST_CASE("Faddeeva function against series and asymptotics") {
  // w(iy) = exp(y^2) erfc(y) for real y.
  for (double y : {0.0, 0.5, 1.0, 3.0, 10.0}) {
    const cd w = faddeeva_w(cd(0, y));
    CHECK(w.real() == doctest::Approx(std::exp(y * y) * std::erfc(y)).epsilon(1e-12));
    CHECK(std::abs(w.imag()) < 1e-14);
  }
  // Large |z|: w(z) ~ i / (sqrt(pi) z) (1 + 1/(2z^2) + 3/(4z^4)).
  const cd z(30, 20);
  const cd asym = cd(0, 1) / (std::sqrt(pi) * z) * (1.0 + 1.0 / (2.0 * z * z) + 3.0 / (4.0 * z * z * z * z));
  CHECK(std::abs(faddeeva_w(z) - asym) < 1e-8 * std::abs(asym));
}

TEST_CASE("Gaussian law") {
  CHECK(gaussian_density(1.0, 0.0) == doctest::Approx(1.0 / std::sqrt(2 * pi)));
  CHECK(gaussian_cdf(4.0, 0.0) == doctest::Approx(0.5));
  CHECK(gaussian_cdf(4.0, 2.0) == doctest::Approx(0.5 * std::erfc(-1.0 / std::sqrt(2.0))));
}

TEST_CASE("truncated moments") {
  auto b = truncated_moments_bernoulli(0.5, 1.0);
  CHECK(b.m2_tail == 0.0);
  CHECK(b.m3_trunc == doctest::Approx(1.0));
  b = truncated_moments_bernoulli(0.5, 0.0);
  CHECK(b.m2_tail == doctest::Approx(1.0));
  CHECK(b.m3_trunc == 0.0);
  b = truncated_moments_bernoulli(0.1, 2.0);
  CHECK(b.m2_tail == doctest::Approx(0.9));
  CHECK(b.m3_trunc == doctest::Approx(0.9 / 27.0));
  CHECK_THROWS_AS(truncated_moments_bernoulli(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(truncated_moments_bernoulli(1.0, 1.0), DomainError);

  auto g = truncated_moments_gaussian(0.0);
  CHECK(g.m2_tail == doctest::Approx(1.0));
  CHECK(g.m3_trunc == 0.0);
  g = truncated_moments_gaussian(40.0);
  CHECK(g.m2_tail < 1e-300);
  CHECK(g.m3_trunc == doctest::Approx(2 * std::sqrt(2 / pi)).epsilon(1e-12));
  g = truncated_moments_gaussian(std::numeric_limits<double>::infinity());
  CHECK(g.m2_tail == 0.0);
  for (double K : {0.3, 1.0, 2.5}) {
    g = truncated_moments_gaussian(K);
    const double tail = 2 * oracle::integrate([](double x) { return x * x * oracle::normal_pdf(x); }, K, K + 40);
    const double third = 2 * oracle::integrate([](double x) { return x * x * x * oracle::normal_pdf(x); }, 0, K);
    CHECK(std::abs(g.m2_tail - tail) < 1e-10);
    CHECK(std::abs(g.m3_trunc - third) < 1e-10);
  }
}

TEST_CASE("law objects") {
  const Law sc = Law::semicircle(2.0);
  CHECK(sc.label() == "sc(2)");
  CHECK(sc.mean() == 0.0);
  CHECK(sc.variance() == doctest::Approx(2.0));
  CHECK(Law::from_descriptor(sc.descriptor()).label() == "sc(2)");
  CHECK(Law::point_mass(0.0).label() == "delta(0)");
  CHECK(Law::gaussian(0.5).label() == "G(0.5)");
  CHECK_THROWS_AS(Law::from_descriptor(nlohmann::json{{"kind", "cauchy"}}), ParseError);
  CHECK_THROWS_AS(Law::from_descriptor(nlohmann::json{{"kind", "semicircle"}}), ParseError);
  CHECK_THROWS_AS(Law::point_mass(0.0).density(0.0), DomainError);
  const Law e = Law::empirical(EmpiricalMeasure({-1.0, 1.0}));
  CHECK(e.cdf(0.0) == 0.5);
  CHECK(std::abs(e.stieltjes(cd(0, 1)) - cd(0, 0.5)) < 1e-15);
}

TEST_CASE("sc(1) [+] sc(1) is sc(2)") {
  const Law& law = sc_sc();
  REQUIRE(law.kind() == Law::Kind::free_convolution);
  const DensityGrid& grid = *law.grid();
  double worst = 0;
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    if (std::abs(grid.x[i]) > 3.0) continue;
    worst = std::max(worst, std::abs(grid.f[i] - semicircle_density(2.0, grid.x[i])));
  }
  CHECK(worst < 1e-4);
  CHECK(std::abs(grid.mass() - 1.0) < 1e-3);
  CHECK(std::abs(grid.variance() - 2.0) < 2e-3);
  // Moments up to order 8 from the tabulated density.
  for (int k = 1; k <= 4; ++k) {
    double m = 0;
    for (std::size_t i = 0; i + 1 < grid.x.size(); ++i) {
      const double a = grid.x[i], b = grid.x[i + 1];
      m += 0.5 * (b - a) * (std::pow(a, 2 * k) * grid.f[i] + std::pow(b, 2 * k) * grid.f[i + 1]);
    }
    const double expected = std::pow(2.0, k) * catalan(k).get_d();
    CHECK(std::abs(m - expected) < 1e-3 * expected);
  }
  // Stieltjes transform of the convolution is the sc(2) transform.
  for (cd z : {cd(0.5, 0.5), cd(-2, 0.1), cd(3, 1)})
    CHECK(std::abs(law.stieltjes(z) - stieltjes_semicircle(2.0, z)) < 1e-9);
}

TEST_CASE("convolution with a point mass at zero is the identity") {
  const Law a = Law::semicircle(1.0);
  const Law conv = Law::free_convolution(a, Law::point_mass(0.0));
  double worst = 0;
  for (std::size_t i = 0; i < conv.grid()->x.size(); ++i) {
    const double x = conv.grid()->x[i];
    worst = std::max(worst, std::abs(conv.grid()->f[i] - semicircle_density(1.0, x)));
  }
  CHECK(worst < 1e-8);
  const Law g = Law::free_convolution(Law::point_mass(0.0), Law::gaussian(0.7));
  for (std::size_t i = 0; i < g.grid()->x.size(); i += 50)
    CHECK(std::abs(g.grid()->f[i] - gaussian_density(0.7, g.grid()->x[i])) < 1e-8);
}

TEST_CASE("G(1) [+] sc(1): variance additivity, symmetry and commutativity") {
  const Law& law = g_sc();
  const DensityGrid& grid = *law.grid();
  CHECK(std::abs(grid.mass() - 1.0) < 1e-3);
  CHECK(std::abs(grid.variance() - 2.0) < 1e-3 * 2.0);
  CHECK(std::abs(grid.mean()) < 1e-6);
  // Symmetric and unimodal.
  const std::size_t n = grid.x.size();
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(grid.f[i] - grid.f[n - 1 - i]) < 1e-8);
  for (std::size_t i = 1; i < n / 2; ++i) CHECK(grid.f[i] >= grid.f[i - 1] - 1e-10);
  for (double v : grid.f) CHECK(v >= 0.0);

  const Law swapped = Law::free_convolution(Law::semicircle(1.0), Law::gaussian(1.0));
  double worst = 0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(grid.f[i] - swapped.grid()->f[i]));
  CHECK(worst < 1e-6);

  for (double x = -6.0; x <= 6.0; x += 0.37) {
    const cd z(x, 0.05 + std::abs(x) * 0.01);
    CHECK(law.stieltjes(z).imag() > 0.0);
    const auto p = solve_subordination(Law::gaussian(1.0), Law::semicircle(1.0), z);
    // Both subordination identities hold at the solution.
    CHECK(std::abs(stieltjes_gaussian(1.0, p.omega1) - p.stieltjes) < 1e-9);
    CHECK(std::abs(stieltjes_semicircle(1.0, p.omega2) - p.stieltjes) < 1e-9);
    CHECK(std::abs(p.omega1 + p.omega2 - z + 1.0 / p.stieltjes) < 1e-9);
  }
}

TEST_CASE("G(1) [+] sc(1) matches a Wigner matrix plus an independent Gaussian diagonal") {
  const int n = 1000, trials = 4;
  std::vector<EmpiricalMeasure> parts;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(55, t));
    SymmetricMatrix m(n);
    const double s = 1.0 / std::sqrt(double(n));
    for (int i = 0; i < n; ++i) {
      m.set(i, i, rng.normal());
      for (int j = i + 1; j < n; ++j) m.set(i, j, s * rng.normal());
    }
    parts.push_back(esd(eigenvalues_symmetric(m)));
  }
  CHECK(ks_distance(Law::empirical(EmpiricalMeasure::pooled(parts)), g_sc()) < 0.05);
}

TEST_CASE("density grid interpolation and CDF") {
  // Triangle density on [0, 2] peaking at 1.
  DensityGrid g;
  for (int i = 0; i <= 2000; ++i) {
    g.x.push_back(i / 1000.0);
    g.f.push_back(1.0 - std::abs(i / 1000.0 - 1.0));
  }
  g.finalize();
  CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(g.density(0.5) == doctest::Approx(0.5));
  CHECK(g.density(0.0005) == doctest::Approx(0.0005));
  CHECK(g.density(-1.0) == 0.0);
  CHECK(g.density(2.5) == 0.0);
  CHECK(g.cdf(1.0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(g.cdf(0.5) == doctest::Approx(0.125).epsilon(1e-6));
  CHECK(g.cdf(0.5004) == doctest::Approx(0.5004 * 0.5004 / 2).epsilon(1e-6));
  CHECK(g.cdf(-1.0) == 0.0);
  CHECK(g.cdf(3.0) == doctest::Approx(1.0));
  CHECK(g.mean() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(g.variance() == doctest::Approx(1.0 / 6.0).epsilon(1e-5));
}
