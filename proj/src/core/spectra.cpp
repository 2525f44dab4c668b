#include "hyperspec/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <sstream>

#include <lapacke.h>

#include "hyperspec/errors.hpp"

extern "C" void openblas_set_num_threads(int num_threads);

namespace hyperspec {

const char* to_string(Scaling s) noexcept {
  switch (s) {
    case Scaling::raw: return "raw";
    case Scaling::by_sqrt_n: return "by_sqrt_n";
    case Scaling::by_n: return "by_n";
    case Scaling::by_sqrt_nr: return "by_sqrt_nr";
  }
  return "raw";
}

Scaling scaling_from_string(const std::string& s) {
  if (s == "raw") return Scaling::raw;
  if (s == "by_sqrt_n") return Scaling::by_sqrt_n;
  if (s == "by_n") return Scaling::by_n;
  if (s == "by_sqrt_nr") return Scaling::by_sqrt_nr;
  throw ConfigError("unknown scaling '" + s + "' (expected raw, by_sqrt_n, by_n, by_sqrt_nr)");
}

double scaling_factor(Scaling s, int n, int r) {
  switch (s) {
    case Scaling::raw: return 1.0;
    case Scaling::by_sqrt_n: return 1.0 / std::sqrt(static_cast<double>(n));
    case Scaling::by_n: return 1.0 / n;
    case Scaling::by_sqrt_nr: return 1.0 / std::sqrt(static_cast<double>(n) * r);
  }
  return 1.0;
}

SpectralSample::SpectralSample(std::vector<double> eigenvalues, Scaling scaling,
                               Provenance provenance)
    : values_(std::move(eigenvalues)), scaling_(scaling), provenance_(std::move(provenance)) {
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("spectral sample: non-finite eigenvalue");
  }
  std::stable_sort(values_.begin(), values_.end(), std::greater<>());
}

SpectralSample SpectralSample::rescaled(double factor, Scaling scaling) const {
  if (!(factor > 0.0)) throw DomainError("rescaled: factor must be positive");
  std::vector<double> v(values_);
  for (double& x : v) x *= factor;
  return SpectralSample(std::move(v), scaling, provenance_);
}

namespace {

void single_threaded_blas() {
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
}

}  // namespace

SpectralSample eigenvalues_symmetric(const SymmetricMatrix& m, Scaling scaling, double factor,
                                     Provenance provenance) {
  if (!m.all_finite()) throw DomainError("eigenvalues_symmetric: matrix has non-finite entries");
  const auto n = static_cast<lapack_int>(m.dim());
  if (n == 0) return SpectralSample({}, scaling, std::move(provenance));
  single_threaded_blas();
  std::vector<double> a(m.data().begin(), m.data().end());
  std::vector<double> w(static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'N', 'U', n, a.data(), n, w.data());
  if (info != 0) {
    throw ConvergenceError("eigenvalues_symmetric: dsyevd failed with info=" + std::to_string(info));
  }
  if (factor != 1.0) {
    for (double& x : w) x *= factor;
  }
  return SpectralSample(std::move(w), scaling, std::move(provenance));
}

EigenDecomposition eigen_decomposition(const SymmetricMatrix& m) {
  if (!m.all_finite()) throw DomainError("eigen_decomposition: matrix has non-finite entries");
  const auto n = static_cast<lapack_int>(m.dim());
  EigenDecomposition out;
  if (n == 0) return out;
  single_threaded_blas();
  out.vectors.assign(m.data().begin(), m.data().end());
  out.values.resize(static_cast<std::size_t>(n));
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'V', 'U', n, out.vectors.data(), n, out.values.data());
  if (info != 0) {
    throw ConvergenceError("eigen_decomposition: dsyevd failed with info=" + std::to_string(info));
  }
  return out;
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw DomainError("empirical measure needs at least one atom");
  for (double v : atoms_) {
    if (!std::isfinite(v)) throw DomainError("empirical measure: non-finite atom");
  }
  std::sort(atoms_.begin(), atoms_.end());
}

double EmpiricalMeasure::cdf(double x) const {
  const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x);
  return static_cast<double>(it - atoms_.begin()) / static_cast<double>(atoms_.size());
}

double EmpiricalMeasure::cdf_left(double x) const {
  const auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x);
  return static_cast<double>(it - atoms_.begin()) / static_cast<double>(atoms_.size());
}

double EmpiricalMeasure::mean() const {
  double s = 0.0;
  for (double v : atoms_) s += v;
  return s / static_cast<double>(atoms_.size());
}

double EmpiricalMeasure::variance() const {
  const double mu = mean();
  double s = 0.0;
  for (double v : atoms_) s += (v - mu) * (v - mu);
  return s / static_cast<double>(atoms_.size());
}

EmpiricalMeasure EmpiricalMeasure::pooled(std::span<const EmpiricalMeasure> parts) {
  if (parts.empty()) throw DomainError("pooled: no measures given");
  const std::size_t size = parts.front().size();
  std::vector<double> all;
  all.reserve(size * parts.size());
  for (const auto& m : parts) {
    if (m.size() != size) throw DomainError("pooled: measures must have equal atom counts");
    all.insert(all.end(), m.atoms_.begin(), m.atoms_.end());
  }
  return EmpiricalMeasure(std::move(all));
}

EmpiricalMeasure esd(const SpectralSample& s) {
  return EmpiricalMeasure(std::vector<double>(s.eigenvalues().begin(), s.eigenvalues().end()));
}

std::complex<double> empirical_stieltjes(const EmpiricalMeasure& m, std::complex<double> z) {
  if (!(z.imag() > 0.0)) throw DomainError("stieltjes transform needs Im z > 0");
  std::complex<double> s = 0.0;
  for (double x : m.atoms()) s += 1.0 / (x - z);
  return s / static_cast<double>(m.size());
}

LowRankEigenvalues low_rank_eigenvalues(double alpha, double beta, double U,
                                        std::span<const double> V) {
  const std::size_t n = V.size();
  if (n < 2) throw DomainError("low_rank_eigenvalues: need n >= 2");
  double mean = 0.0;
  for (double v : V) mean += v;
  mean /= static_cast<double>(n);
  double s2 = 0.0;
  for (double v : V) s2 += (v - mean) * (v - mean);
  s2 /= static_cast<double>(n);
  const double a = 0.5 * alpha * U + beta * mean;
  const double root = std::sqrt(a * a + beta * beta * s2);
  const double nd = static_cast<double>(n);
  // a - root loses digits when a > 0 and the off-diagonal term is small; use
  // the product of the two roots, -beta^2 s^2, instead.
  const double big = a >= 0.0 ? a + root : a - root;
  const double small = big != 0.0 ? -beta * beta * s2 / big : 0.0;
  return a >= 0.0 ? LowRankEigenvalues{nd * big, nd * small}
                  : LowRankEigenvalues{nd * small, nd * big};
}

std::pair<double, double> edge_statistics(const SpectralSample& s, std::size_t k) {
  if (k < 1 || k > s.size()) throw DomainError("edge_statistics: k must lie in [1, n]");
  const auto v = s.eigenvalues();
  return {v[k - 1], v[s.size() - k]};
}

double gaussian_order_stat_centering(long n, long k) {
  if (n < 3) throw DomainError("gaussian_order_stat_centering: need n >= 3");
  if (k < 1) throw DomainError("gaussian_order_stat_centering: need k >= 1");
  const double l = std::log(static_cast<double>(n));
  const double root = std::sqrt(2.0 * l);
  return root - (std::log(l) + std::log(4.0 * std::numbers::pi)) / (2.0 * root);
}

void write_spectrum_csv(const SpectralSample& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "# ensemble=" << s.provenance().ensemble << " seed=" << s.provenance().seed
      << " scaling=" << to_string(s.scaling()) << " n=" << s.size() << '\n';
  out << "eigenvalue\n" << std::setprecision(17);
  for (double v : s.eigenvalues()) out << v << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

SpectralSample read_spectrum_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Provenance prov;
  Scaling scaling = Scaling::raw;
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream fields(line.substr(1));
      std::string field;
      while (fields >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
        if (key == "ensemble") prov.ensemble = value;
        else if (key == "seed") prov.seed = std::stoull(value);
        else if (key == "scaling") scaling = scaling_from_string(value);
      }
      continue;
    }
    if (line == "eigenvalue") continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(line, &used);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": not a number");
    }
    if (line.find_first_not_of(" \t\r", used) != std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": trailing characters");
    }
    values.push_back(v);
  }
  if (values.empty()) throw ParseError(path.string() + ": no eigenvalues");
  return SpectralSample(std::move(values), scaling, std::move(prov));
}

}  // namespace hyperspec
