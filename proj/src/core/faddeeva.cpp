#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "hyperspec/errors.hpp"
#include "hyperspec/laws.hpp"

namespace hyperspec {

namespace {

constexpr int kTerms = 40;
constexpr double kContinuedFractionRadius = 15.0;
constexpr int kContinuedFractionDepth = 60;

struct Weideman {
  double L = 0.0;
  std::array<double, kTerms> a{};

  Weideman() {
    const int m = 2 * kTerms;
    L = std::sqrt(kTerms / std::numbers::sqrt2);
    // Cosine series of (L^2 + t^2) exp(-t^2) on t = L tan(theta / 2).
    std::array<double, 2 * m> f{};
    for (int k = -m + 1; k <= m - 1; ++k) {
      const double t = L * std::tan(0.5 * k * std::numbers::pi / m);
      f[static_cast<std::size_t>(k + m)] = std::exp(-t * t) * (L * L + t * t);
    }
    for (int j = 1; j <= kTerms; ++j) {
      double s = 0.0;
      for (int k = -m + 1; k <= m - 1; ++k) {
        s += f[static_cast<std::size_t>(k + m)] * std::cos(std::numbers::pi * k * j / m);
      }
      a[static_cast<std::size_t>(j - 1)] = s / (2 * m);
    }
  }
};

const Weideman& weideman() {
  static const Weideman table;
  return table;
}

}  // namespace

std::complex<double> faddeeva_w(std::complex<double> z) {
  if (z.imag() < 0.0) throw DomainError("faddeeva_w: implemented for Im z >= 0 only");
  const std::complex<double> i(0.0, 1.0);
  if (std::abs(z) > kContinuedFractionRadius) {
    // w(z) = (i / sqrt(pi)) / (z - (1/2) / (z - 1 / (z - (3/2) / (z - ...))))
    std::complex<double> t = z;
    for (int k = kContinuedFractionDepth; k >= 1; --k) t = z - (0.5 * k) / t;
    return i * std::numbers::inv_sqrtpi / t;
  }
  const Weideman& w = weideman();
  const std::complex<double> denom = w.L - i * z;
  const std::complex<double> Z = (w.L + i * z) / denom;
  std::complex<double> p = 0.0;
  for (int k = kTerms - 1; k >= 0; --k) p = p * Z + w.a[static_cast<std::size_t>(k)];
  return 2.0 * p / (denom * denom) + std::numbers::inv_sqrtpi / denom;
}

}  // namespace hyperspec
