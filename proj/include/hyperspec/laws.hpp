#pragma once

#include <complex>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hyperspec/combinatorics.hpp"
#include "hyperspec/spectra.hpp"

namespace hyperspec {

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im z >= 0.
/// Weideman's rational approximation (40 terms) for |z| <= 15 and the Laplace
/// continued fraction beyond.
std::complex<double> faddeeva_w(std::complex<double> z);

BigInt catalan(long k);

/// m-th moment of sc(sigma2): zero for odd m, sigma^m Catalan(m/2) for even m.
double semicircle_moment(double sigma2, int order);

double semicircle_density(double sigma2, double x);
double semicircle_cdf(double sigma2, double x);
std::complex<double> stieltjes_semicircle(double sigma2, std::complex<double> z);
double gaussian_density(double sigma2, double x);
double gaussian_cdf(double sigma2, double x);
std::complex<double> stieltjes_gaussian(double sigma2, std::complex<double> z);

struct TruncatedMoments {
  double m2_tail = 0.0;   // E[Y^2 1(|Y| > K)]
  double m3_trunc = 0.0;  // E[|Y|^3 1(|Y| <= K)]
};

/// Y = (B - p) / sqrt(p(1-p)) with B ~ Bernoulli(p).
TruncatedMoments truncated_moments_bernoulli(double p, double K);
/// Y standard normal.
TruncatedMoments truncated_moments_gaussian(double K);

/// Density sampled on a uniform grid, as produced by Stieltjes inversion.
struct DensityGrid {
  std::vector<double> x;
  std::vector<double> f;
  double eps = 0.0;
  /// Normalized cumulative trapezoid of f; filled by finalize().
  std::vector<double> cumulative;

  void finalize();

  double mass() const;
  double mean() const;
  double variance() const;
  /// Linear interpolation, zero outside the grid.
  double density(double at) const;
  /// Normalized cumulative trapezoid, linearly interpolated.
  double cdf(double at) const;
  void write_csv(const std::filesystem::path& path) const;
};

struct GridSpec {
  int points = 2001;
  /// Explicit range; when absent the grid is centred on the mean with
  /// half-width 2 sigma_1 + 2 sigma_2 + 4 sqrt(var_1 + var_2).
  std::optional<std::pair<double, double>> range;
  /// Smallest inversion offset, relative to the combined standard deviation.
  /// Offsets eps and 2 eps are combined by Richardson extrapolation.
  double eps = 1e-6;
};

class Law;

struct SemicircleLaw {
  double sigma2;
};
struct GaussianLaw {
  double sigma2;
};
struct EmpiricalLaw {
  EmpiricalMeasure measure;
};
struct FreeConvolutionLaw {
  std::shared_ptr<const Law> a;
  std::shared_ptr<const Law> b;
  std::shared_ptr<const DensityGrid> grid;
};

/// Probability law on the real line. Empirical laws have no density.
class Law {
 public:
  enum class Kind { semicircle, gaussian, empirical, free_convolution };

  static Law semicircle(double sigma2);
  static Law gaussian(double sigma2);
  static Law empirical(EmpiricalMeasure measure);
  static Law point_mass(double at);
  static Law free_convolution(const Law& a, const Law& b, const GridSpec& spec = {});

  Kind kind() const;
  bool is_discrete() const { return kind() == Kind::empirical; }
  const EmpiricalMeasure* measure() const;
  const DensityGrid* grid() const;

  double density(double x) const;
  double cdf(double x) const;
  double cdf_left(double x) const;
  std::complex<double> stieltjes(std::complex<double> z) const;
  std::complex<double> stieltjes_derivative(std::complex<double> z) const;
  double mean() const;
  double variance() const;
  /// Interval holding all mass (semicircle, empirical) or all but a
  /// negligible tail (Gaussian, free convolution grid range).
  std::pair<double, double> support_hint() const;

  /// Short label such as "sc(0.64)" or "G(1) [+] sc(1)".
  std::string label() const;
  nlohmann::json descriptor() const;
  static Law from_descriptor(const nlohmann::json& j);

 private:
  using Impl = std::variant<SemicircleLaw, GaussianLaw, EmpiricalLaw, FreeConvolutionLaw>;
  explicit Law(Impl impl) : impl_(std::move(impl)) {}
  Impl impl_;
};

/// Subordination solution at one point: S_1(omega1) = S_2(omega2) = S and
/// omega1 + omega2 = z - 1/S.
struct SubordinationPoint {
  std::complex<double> omega1;
  std::complex<double> omega2;
  std::complex<double> stieltjes;
  int iterations = 0;
};

/// Solves the subordination system at z (Im z > 0). `guess` seeds omega1.
/// Throws ConvergenceError carrying z and the final residual on failure.
SubordinationPoint solve_subordination(const Law& a, const Law& b, std::complex<double> z,
                                       std::optional<std::complex<double>> guess = std::nullopt);

DensityGrid free_additive_convolution(const Law& a, const Law& b, const GridSpec& spec = {});

}  // namespace hyperspec
