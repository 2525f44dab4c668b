#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hyperspec/gham.hpp"

namespace hyperspec {

enum class Scaling { raw, by_sqrt_n, by_n, by_sqrt_nr };

const char* to_string(Scaling s) noexcept;
Scaling scaling_from_string(const std::string& s);

/// Multiplier applied to raw eigenvalues for a given scaling.
double scaling_factor(Scaling s, int n, int r);

struct Provenance {
  std::string ensemble;
  std::uint64_t seed = 0;
};

/// Eigenvalues sorted descending, all finite.
class SpectralSample {
 public:
  SpectralSample() = default;
  SpectralSample(std::vector<double> eigenvalues, Scaling scaling, Provenance provenance);

  std::span<const double> eigenvalues() const { return values_; }
  std::size_t size() const { return values_.size(); }
  Scaling scaling() const { return scaling_; }
  const Provenance& provenance() const { return provenance_; }

  /// Returns a copy with every eigenvalue multiplied by factor > 0.
  SpectralSample rescaled(double factor, Scaling scaling) const;

 private:
  std::vector<double> values_;
  Scaling scaling_ = Scaling::raw;
  Provenance provenance_;
};

SpectralSample eigenvalues_symmetric(const SymmetricMatrix& m, Scaling scaling = Scaling::raw,
                                     double factor = 1.0, Provenance provenance = {});

struct EigenDecomposition {
  std::vector<double> values;        // ascending
  std::vector<double> vectors;       // column j (row-major, stride dim) pairs with values[j]
};

/// Full eigendecomposition; used for residual probes only.
EigenDecomposition eigen_decomposition(const SymmetricMatrix& m);

/// Uniform probability measure on finitely many atoms.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(std::vector<double> atoms);

  std::span<const double> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  /// Right-continuous CDF, P(X <= x).
  double cdf(double x) const;
  /// Left limit, P(X < x).
  double cdf_left(double x) const;
  double mean() const;
  double variance() const;

  /// Pools several measures of equal size; the result's CDF is the average of
  /// the inputs' CDFs.
  static EmpiricalMeasure pooled(std::span<const EmpiricalMeasure> parts);

 private:
  std::vector<double> atoms_;  // ascending
};

EmpiricalMeasure esd(const SpectralSample& s);

std::complex<double> empirical_stieltjes(const EmpiricalMeasure& m, std::complex<double> z);

struct LowRankEigenvalues {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
};

/// Nonzero eigenvalues of alpha U 11^T + beta (1 V^T + V 1^T).
LowRankEigenvalues low_rank_eigenvalues(double alpha, double beta, double U,
                                        std::span<const double> V);

/// (lambda_k, lambda_{n+1-k}) of a descending sample.
std::pair<double, double> edge_statistics(const SpectralSample& s, std::size_t k);

/// sqrt(2 log n) - (log log n + log 4 pi) / (2 sqrt(2 log n)).
double gaussian_order_stat_centering(long n, long k = 1);

void write_spectrum_csv(const SpectralSample& s, const std::filesystem::path& path);
SpectralSample read_spectrum_csv(const std::filesystem::path& path);

}  // namespace hyperspec
