#include "hyperspec/laws.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "hyperspec/errors.hpp"

namespace hyperspec {

namespace {

using cplx = std::complex<double>;
constexpr cplx kI(0.0, 1.0);

void require_positive_variance(double sigma2, const char* what) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw DomainError(std::string(what) + ": variance must be positive and finite");
  }
}

void require_upper(cplx z, const char* what) {
  if (!(z.imag() > 0.0)) throw DomainError(std::string(what) + ": needs Im z > 0");
}

std::string format_number(double v) {
  std::ostringstream out;
  out << std::setprecision(6) << v;
  return out.str();
}

}  // namespace

BigInt catalan(long k) {
  if (k < 0) throw DomainError("catalan: k must be non-negative");
  return binomial_coefficient(2 * k, k) / (k + 1);
}

double semicircle_moment(double sigma2, int order) {
  require_positive_variance(sigma2, "semicircle_moment");
  if (order < 0) throw DomainError("semicircle_moment: order must be non-negative");
  if (order % 2) return 0.0;
  return std::pow(sigma2, order / 2) * catalan(order / 2).get_d();
}

double semicircle_density(double sigma2, double x) {
  require_positive_variance(sigma2, "semicircle_density");
  const double r2 = 4.0 * sigma2 - x * x;
  if (r2 <= 0.0) return 0.0;
  return std::sqrt(r2) / (2.0 * std::numbers::pi * sigma2);
}

double semicircle_cdf(double sigma2, double x) {
  require_positive_variance(sigma2, "semicircle_cdf");
  const double sigma = std::sqrt(sigma2);
  if (x <= -2.0 * sigma) return 0.0;
  if (x >= 2.0 * sigma) return 1.0;
  const double v = 0.5 + x * std::sqrt(4.0 * sigma2 - x * x) / (4.0 * std::numbers::pi * sigma2) +
                   std::asin(x / (2.0 * sigma)) / std::numbers::pi;
  return std::clamp(v, 0.0, 1.0);
}

std::complex<double> stieltjes_semicircle(double sigma2, std::complex<double> z) {
  require_positive_variance(sigma2, "stieltjes_semicircle");
  require_upper(z, "stieltjes_semicircle");
  const double two_sigma = 2.0 * std::sqrt(sigma2);
  // The product of principal roots picks the branch with Im S > 0.
  return (-z + std::sqrt(z - two_sigma) * std::sqrt(z + two_sigma)) / (2.0 * sigma2);
}

double gaussian_density(double sigma2, double x) {
  require_positive_variance(sigma2, "gaussian_density");
  return std::exp(-0.5 * x * x / sigma2) / std::sqrt(2.0 * std::numbers::pi * sigma2);
}

double gaussian_cdf(double sigma2, double x) {
  require_positive_variance(sigma2, "gaussian_cdf");
  return 0.5 * std::erfc(-x / std::sqrt(2.0 * sigma2));
}

std::complex<double> stieltjes_gaussian(double sigma2, std::complex<double> z) {
  require_positive_variance(sigma2, "stieltjes_gaussian");
  require_upper(z, "stieltjes_gaussian");
  const double sigma = std::sqrt(sigma2);
  const cplx zeta = z / (sigma * std::numbers::sqrt2);
  return kI * std::sqrt(std::numbers::pi / 2.0) / sigma * faddeeva_w(zeta);
}

namespace {

cplx stieltjes_gaussian_derivative(double sigma2, cplx z) {
  require_positive_variance(sigma2, "stieltjes_gaussian");
  require_upper(z, "stieltjes_gaussian");
  const double sigma = std::sqrt(sigma2);
  const cplx zeta = z / (sigma * std::numbers::sqrt2);
  const cplx dw = -2.0 * zeta * faddeeva_w(zeta) + 2.0 * kI * std::numbers::inv_sqrtpi;
  return kI * std::sqrt(std::numbers::pi) / (2.0 * sigma2) * dw;
}

}  // namespace

TruncatedMoments truncated_moments_bernoulli(double p, double K) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("truncated_moments_bernoulli: need 0 < p < 1");
  if (!(K >= 0.0)) throw DomainError("truncated_moments_bernoulli: need K >= 0");
  const double high = std::sqrt((1.0 - p) / p);
  const double low = std::sqrt(p / (1.0 - p));
  TruncatedMoments m;
  for (auto [x, w] : {std::pair{high, p}, std::pair{low, 1.0 - p}}) {
    if (x > K) {
      m.m2_tail += w * x * x;
    } else {
      m.m3_trunc += w * x * x * x;
    }
  }
  return m;
}

TruncatedMoments truncated_moments_gaussian(double K) {
  if (!(K >= 0.0)) throw DomainError("truncated_moments_gaussian: need K >= 0");
  const double full_third = 2.0 * std::sqrt(2.0 / std::numbers::pi);
  if (std::isinf(K)) return TruncatedMoments{0.0, full_third};
  const double phi = std::exp(-0.5 * K * K) / std::sqrt(2.0 * std::numbers::pi);
  TruncatedMoments m;
  m.m2_tail = 2.0 * K * phi + std::erfc(K / std::numbers::sqrt2);
  m.m3_trunc = full_third * (1.0 - (1.0 + 0.5 * K * K) * std::exp(-0.5 * K * K));
  return m;
}

// DensityGrid

void DensityGrid::finalize() {
  cumulative.assign(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) {
    cumulative[i] = cumulative[i - 1] + 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
  }
  const double total = cumulative.empty() ? 0.0 : cumulative.back();
  if (total > 0.0) {
    for (double& c : cumulative) c /= total;
  }
}

double DensityGrid::mass() const {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

double DensityGrid::mean() const {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    s += 0.5 * (f[i] * x[i] + f[i - 1] * x[i - 1]) * (x[i] - x[i - 1]);
  }
  return s / mass();
}

double DensityGrid::variance() const {
  const double mu = mean();
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double a = x[i] - mu, b = x[i - 1] - mu;
    s += 0.5 * (f[i] * a * a + f[i - 1] * b * b) * (x[i] - x[i - 1]);
  }
  return s / mass();
}

double DensityGrid::density(double at) const {
  if (x.size() < 2 || at < x.front() || at > x.back()) return 0.0;
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - x.begin()), x.size() - 1);
  const std::size_t lo = hi - 1;
  const double t = (at - x[lo]) / (x[hi] - x[lo]);
  return (1.0 - t) * f[lo] + t * f[hi];
}

double DensityGrid::cdf(double at) const {
  if (x.size() < 2 || at <= x.front()) return 0.0;
  if (at >= x.back()) return 1.0;
  if (cumulative.size() != x.size()) {
    DensityGrid copy = *this;
    copy.finalize();
    return copy.cdf(at);
  }
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  const auto hi = static_cast<std::size_t>(it - x.begin());
  const std::size_t lo = hi - 1;
  // Integrate the linear interpolant exactly on [x_lo, at].
  const double h = at - x[lo];
  const double slope = (f[hi] - f[lo]) / (x[hi] - x[lo]);
  const double cell = 0.5 * (f[hi] + f[lo]) * (x[hi] - x[lo]);
  const double piece = f[lo] * h + 0.5 * slope * h * h;
  const double cell_cdf = cumulative[hi] - cumulative[lo];
  const double frac = cell > 0.0 ? piece / cell : h / (x[hi] - x[lo]);
  return std::clamp(cumulative[lo] + frac * cell_cdf, 0.0, 1.0);
}

void DensityGrid::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "x,f\n" << std::setprecision(17);
  for (std::size_t i = 0; i < x.size(); ++i) out << x[i] << ',' << f[i] << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

// Law

Law Law::semicircle(double sigma2) {
  require_positive_variance(sigma2, "semicircle law");
  return Law(SemicircleLaw{sigma2});
}

Law Law::gaussian(double sigma2) {
  require_positive_variance(sigma2, "gaussian law");
  return Law(GaussianLaw{sigma2});
}

Law Law::empirical(EmpiricalMeasure measure) { return Law(EmpiricalLaw{std::move(measure)}); }

Law Law::point_mass(double at) { return empirical(EmpiricalMeasure({at})); }

Law Law::free_convolution(const Law& a, const Law& b, const GridSpec& spec) {
  auto grid = std::make_shared<const DensityGrid>(free_additive_convolution(a, b, spec));
  return Law(FreeConvolutionLaw{std::make_shared<const Law>(a), std::make_shared<const Law>(b),
                                std::move(grid)});
}

Law::Kind Law::kind() const { return static_cast<Kind>(impl_.index()); }

const EmpiricalMeasure* Law::measure() const {
  if (const auto* e = std::get_if<EmpiricalLaw>(&impl_)) return &e->measure;
  return nullptr;
}

const DensityGrid* Law::grid() const {
  if (const auto* c = std::get_if<FreeConvolutionLaw>(&impl_)) return c->grid.get();
  return nullptr;
}

double Law::density(double x) const {
  switch (kind()) {
    case Kind::semicircle: return semicircle_density(std::get<SemicircleLaw>(impl_).sigma2, x);
    case Kind::gaussian: return gaussian_density(std::get<GaussianLaw>(impl_).sigma2, x);
    case Kind::empirical: throw DomainError("empirical law has no density");
    case Kind::free_convolution: return std::get<FreeConvolutionLaw>(impl_).grid->density(x);
  }
  throw InternalError("unreachable law kind");
}

double Law::cdf(double x) const {
  switch (kind()) {
    case Kind::semicircle: return semicircle_cdf(std::get<SemicircleLaw>(impl_).sigma2, x);
    case Kind::gaussian: return gaussian_cdf(std::get<GaussianLaw>(impl_).sigma2, x);
    case Kind::empirical: return std::get<EmpiricalLaw>(impl_).measure.cdf(x);
    case Kind::free_convolution: return std::get<FreeConvolutionLaw>(impl_).grid->cdf(x);
  }
  throw InternalError("unreachable law kind");
}

double Law::cdf_left(double x) const {
  if (const auto* m = measure()) return m->cdf_left(x);
  return cdf(x);
}

std::complex<double> Law::stieltjes(std::complex<double> z) const {
  switch (kind()) {
    case Kind::semicircle: return stieltjes_semicircle(std::get<SemicircleLaw>(impl_).sigma2, z);
    case Kind::gaussian: return stieltjes_gaussian(std::get<GaussianLaw>(impl_).sigma2, z);
    case Kind::empirical: return empirical_stieltjes(std::get<EmpiricalLaw>(impl_).measure, z);
    case Kind::free_convolution: {
      const auto& c = std::get<FreeConvolutionLaw>(impl_);
      return solve_subordination(*c.a, *c.b, z).stieltjes;
    }
  }
  throw InternalError("unreachable law kind");
}

std::complex<double> Law::stieltjes_derivative(std::complex<double> z) const {
  switch (kind()) {
    case Kind::semicircle: {
      const double s2 = std::get<SemicircleLaw>(impl_).sigma2;
      const cplx s = stieltjes_semicircle(s2, z);
      return -s / (2.0 * s2 * s + z);
    }
    case Kind::gaussian:
      return stieltjes_gaussian_derivative(std::get<GaussianLaw>(impl_).sigma2, z);
    case Kind::empirical: {
      require_upper(z, "stieltjes_derivative");
      const auto& m = std::get<EmpiricalLaw>(impl_).measure;
      cplx s = 0.0;
      for (double x : m.atoms()) s += 1.0 / ((x - z) * (x - z));
      return s / static_cast<double>(m.size());
    }
    case Kind::free_convolution: {
      const auto& c = std::get<FreeConvolutionLaw>(impl_);
      const SubordinationPoint sp = solve_subordination(*c.a, *c.b, z);
      const cplx s1 = c.a->stieltjes(sp.omega1), d1 = c.a->stieltjes_derivative(sp.omega1);
      const cplx s2 = c.b->stieltjes(sp.omega2), d2 = c.b->stieltjes_derivative(sp.omega2);
      const cplx h1 = d1 / (s1 * s1) - 1.0, h2 = d2 / (s2 * s2) - 1.0;
      const cplx domega1 = (1.0 + h2) / (1.0 - h2 * h1);
      return d1 * domega1;
    }
  }
  throw InternalError("unreachable law kind");
}

double Law::mean() const {
  switch (kind()) {
    case Kind::semicircle:
    case Kind::gaussian: return 0.0;
    case Kind::empirical: return std::get<EmpiricalLaw>(impl_).measure.mean();
    case Kind::free_convolution: {
      const auto& c = std::get<FreeConvolutionLaw>(impl_);
      return c.a->mean() + c.b->mean();
    }
  }
  throw InternalError("unreachable law kind");
}

double Law::variance() const {
  switch (kind()) {
    case Kind::semicircle: return std::get<SemicircleLaw>(impl_).sigma2;
    case Kind::gaussian: return std::get<GaussianLaw>(impl_).sigma2;
    case Kind::empirical: return std::get<EmpiricalLaw>(impl_).measure.variance();
    case Kind::free_convolution: {
      const auto& c = std::get<FreeConvolutionLaw>(impl_);
      return c.a->variance() + c.b->variance();
    }
  }
  throw InternalError("unreachable law kind");
}

std::pair<double, double> Law::support_hint() const {
  switch (kind()) {
    case Kind::semicircle: {
      const double e = 2.0 * std::sqrt(std::get<SemicircleLaw>(impl_).sigma2);
      return {-e, e};
    }
    case Kind::gaussian: {
      const double e = 8.5 * std::sqrt(std::get<GaussianLaw>(impl_).sigma2);
      return {-e, e};
    }
    case Kind::empirical: {
      const auto atoms = std::get<EmpiricalLaw>(impl_).measure.atoms();
      return {atoms.front(), atoms.back()};
    }
    case Kind::free_convolution: {
      const auto& g = *std::get<FreeConvolutionLaw>(impl_).grid;
      return {g.x.front(), g.x.back()};
    }
  }
  throw InternalError("unreachable law kind");
}

std::string Law::label() const {
  switch (kind()) {
    case Kind::semicircle: return "sc(" + format_number(std::get<SemicircleLaw>(impl_).sigma2) + ")";
    case Kind::gaussian: return "G(" + format_number(std::get<GaussianLaw>(impl_).sigma2) + ")";
    case Kind::empirical: {
      const auto& m = std::get<EmpiricalLaw>(impl_).measure;
      if (m.size() == 1) return "delta(" + format_number(m.atoms().front()) + ")";
      return "empirical(" + std::to_string(m.size()) + " atoms)";
    }
    case Kind::free_convolution: {
      const auto& c = std::get<FreeConvolutionLaw>(impl_);
      return c.a->label() + " [+] " + c.b->label();
    }
  }
  throw InternalError("unreachable law kind");
}

nlohmann::json Law::descriptor() const {
  switch (kind()) {
    case Kind::semicircle:
      return {{"kind", "semicircle"}, {"sigma2", std::get<SemicircleLaw>(impl_).sigma2}};
    case Kind::gaussian:
      return {{"kind", "gaussian"}, {"sigma2", std::get<GaussianLaw>(impl_).sigma2}};
    case Kind::empirical: {
      const auto atoms = std::get<EmpiricalLaw>(impl_).measure.atoms();
      return {{"kind", "empirical"}, {"atoms", std::vector<double>(atoms.begin(), atoms.end())}};
    }
    case Kind::free_convolution: {
      const auto& c = std::get<FreeConvolutionLaw>(impl_);
      return {{"kind", "free_convolution"},
              {"operands", {c.a->descriptor(), c.b->descriptor()}},
              {"grid_points", c.grid->x.size()}};
    }
  }
  throw InternalError("unreachable law kind");
}

Law Law::from_descriptor(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "semicircle") return semicircle(j.at("sigma2").get<double>());
    if (kind == "gaussian") return gaussian(j.at("sigma2").get<double>());
    if (kind == "point_mass") return point_mass(j.value("at", 0.0));
    if (kind == "empirical") return empirical(EmpiricalMeasure(j.at("atoms").get<std::vector<double>>()));
    if (kind == "free_convolution") {
      const auto& ops = j.at("operands");
      if (!ops.is_array() || ops.size() != 2) {
        throw ParseError("law descriptor: free_convolution needs exactly two operands");
      }
      GridSpec spec;
      spec.points = j.value("grid_points", spec.points);
      return free_convolution(from_descriptor(ops[0]), from_descriptor(ops[1]), spec);
    }
    throw ParseError("law descriptor: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("law descriptor: ") + e.what());
  }
}

// Subordination

namespace {

struct Branch {
  cplx h;   // F(w) - w with F = -1/S
  cplx dh;  // F'(w) - 1
};

Branch branch(const Law& law, cplx w) {
  const cplx s = law.stieltjes(w);
  const cplx ds = law.stieltjes_derivative(w);
  return {-1.0 / s - w, ds / (s * s) - 1.0};
}

struct Evaluation {
  cplx omega1, omega2, t;
  cplx dg;  // derivative of T(omega1) - omega1
  double residual = 0.0;
};

Evaluation evaluate(const Law& a, const Law& b, cplx z, cplx omega1) {
  Evaluation e;
  e.omega1 = omega1;
  const Branch b1 = branch(a, omega1);
  e.omega2 = z + b1.h;
  const Branch b2 = branch(b, e.omega2);
  e.t = z + b2.h;
  e.dg = b2.dh * b1.dh - 1.0;
  e.residual = std::abs(e.t - omega1);
  return e;
}

constexpr double kTolerance = 1e-11;
constexpr int kNewtonIterations = 60;
constexpr double kDamping = 0.5;
constexpr int kFixedPointIterations = 100000;

double tolerance_for(cplx omega) { return kTolerance * (1.0 + std::abs(omega)); }

bool newton(const Law& a, const Law& b, cplx z, cplx start, Evaluation& out, int& iterations) {
  if (!(start.imag() > 0.0)) return false;
  Evaluation e = evaluate(a, b, z, start);
  for (int it = 0; it < kNewtonIterations; ++it) {
    ++iterations;
    if (e.residual <= 1e-3 * tolerance_for(e.omega1)) break;
    const cplx step = (e.t - e.omega1) / -e.dg;
    bool improved = false;
    double scale = 1.0;
    for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
      const cplx trial = e.omega1 - scale * step;
      if (!(trial.imag() > 0.0)) continue;
      Evaluation next = evaluate(a, b, z, trial);
      if (std::isfinite(next.residual) && next.residual < e.residual) {
        e = next;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  out = e;
  return std::isfinite(e.residual) && e.residual <= tolerance_for(e.omega1);
}

bool damped_fixed_point(const Law& a, const Law& b, cplx z, cplx start, Evaluation& out,
                        int& iterations) {
  Evaluation e = evaluate(a, b, z, start);
  for (int it = 0; it < kFixedPointIterations; ++it) {
    ++iterations;
    if (e.residual <= tolerance_for(e.omega1)) break;
    e = evaluate(a, b, z, e.omega1 + kDamping * (e.t - e.omega1));
  }
  out = e;
  return std::isfinite(e.residual) && e.residual <= tolerance_for(e.omega1);
}

SubordinationPoint finish(const Law& a, const Evaluation& e, int iterations) {
  return SubordinationPoint{e.omega1, e.omega2, a.stieltjes(e.omega1), iterations};
}

}  // namespace

SubordinationPoint solve_subordination(const Law& a, const Law& b, std::complex<double> z,
                                       std::optional<std::complex<double>> guess) {
  require_upper(z, "solve_subordination");
  int iterations = 0;
  Evaluation e;
  if (guess && newton(a, b, z, *guess, e, iterations)) return finish(a, e, iterations);

  // Continuation in Im z: far from the axis T is a strong contraction, and
  // each halving of the height starts Newton close to the next solution.
  const double scale = 1.0 + std::sqrt(a.variance() + b.variance());
  double height = std::max(z.imag(), 10.0 * scale);
  cplx omega = cplx(z.real(), height) - b.mean();
  if (!damped_fixed_point(a, b, cplx(z.real(), height), omega + kI * 0.0, e, iterations)) {
    throw ConvergenceError("subordination: no convergence at the continuation start for z = (" +
                           format_number(z.real()) + ", " + format_number(height) + ")");
  }
  omega = e.omega1;
  while (height > z.imag()) {
    double next = std::max(z.imag(), 0.25 * height);
    Evaluation trial;
    int shrink = 0;
    while (!newton(a, b, cplx(z.real(), next), omega, trial, iterations)) {
      if (++shrink > 30) {
        next = -1.0;
        break;
      }
      next = std::sqrt(next * height);
    }
    if (next < 0.0) break;
    omega = trial.omega1;
    height = next;
    e = trial;
  }
  if (height <= z.imag() && e.residual <= tolerance_for(e.omega1)) return finish(a, e, iterations);

  if (damped_fixed_point(a, b, z, omega, e, iterations)) return finish(a, e, iterations);
  std::ostringstream msg;
  msg << std::setprecision(10) << "subordination: no convergence at z = (" << z.real() << ", "
      << z.imag() << "), residual " << e.residual << " after " << iterations << " iterations";
  throw ConvergenceError(msg.str());
}

DensityGrid free_additive_convolution(const Law& a, const Law& b, const GridSpec& spec) {
  if (spec.points < 3) throw DomainError("free_additive_convolution: need at least 3 grid points");
  if (!(spec.eps > 0.0)) throw DomainError("free_additive_convolution: eps must be positive");
  const double va = a.variance(), vb = b.variance();
  const double total_sd = std::sqrt(va + vb);
  if (!(total_sd > 0.0)) {
    throw DomainError("free_additive_convolution: both operands are point masses");
  }
  double lo, hi;
  if (spec.range) {
    std::tie(lo, hi) = *spec.range;
    if (!(hi > lo)) throw DomainError("free_additive_convolution: empty grid range");
  } else {
    const double center = a.mean() + b.mean();
    const double half = 2.0 * std::sqrt(va) + 2.0 * std::sqrt(vb) + 4.0 * total_sd;
    lo = center - half;
    hi = center + half;
  }
  DensityGrid grid;
  grid.eps = spec.eps * total_sd;
  const auto n = static_cast<std::size_t>(spec.points);
  grid.x.resize(n);
  grid.f.resize(n);
  const double eps = grid.eps;
  std::optional<cplx> warm;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    grid.x[i] = x;
    const SubordinationPoint fine = solve_subordination(a, b, cplx(x, eps), warm);
    const SubordinationPoint coarse = solve_subordination(a, b, cplx(x, 2.0 * eps), fine.omega1);
    warm = fine.omega1;
    const double f1 = fine.stieltjes.imag() / std::numbers::pi;
    const double f2 = coarse.stieltjes.imag() / std::numbers::pi;
    grid.f[i] = std::max(0.0, 2.0 * f1 - f2);
  }
  grid.finalize();
  const double mass = grid.mass();
  if (!(mass >= 0.999 && mass <= 1.001)) {
    throw ConvergenceError("free_additive_convolution: density mass " + format_number(mass) +
                           " outside [0.999, 1.001]; widen the grid range");
  }
  return grid;
}

}  // namespace hyperspec
