#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hyperspec/combinatorics.hpp"

namespace hyperspec {

/// Dense symmetric matrix stored in full row-major form. set() and add()
/// write both triangles so the two halves never drift apart.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(std::size_t dim) : dim_(dim), a_(dim * dim, 0.0) {}

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    a_[i * dim_ + j] = v;
    a_[j * dim_ + i] = v;
  }
  void add(std::size_t i, std::size_t j, double v) {
    a_[i * dim_ + j] += v;
    if (i != j) a_[j * dim_ + i] += v;
  }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(a_).subspan(i * dim_, dim_);
  }
  std::span<const double> data() const { return a_; }
  std::vector<double>& storage() { return a_; }

  double frobenius_norm() const;
  bool all_finite() const;
  SymmetricMatrix scaled(double factor) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> a_;
};

/// A_ij = number of hyperedges containing both i and j; zero diagonal.
SymmetricMatrix adjacency_from_hypergraph(const HypergraphSample& h);

/// H_ij = (A_ij - pN) / (sqrt(p(1-p)) sqrt(N)) off the diagonal, H_ii = 0.
SymmetricMatrix gham_from_adjacency(const SymmetricMatrix& adjacency, const ModelParams& params);

/// H(x) = N^{-1/2} sum_l x_l Q_l, with x indexed by the C(n, r) hyperedges in
/// lexicographic order and Q_l = J - I on the vertices of edge l.
SymmetricMatrix gham_from_weights(int n, int r, std::span<const double> weights);

struct CovarianceParams {
  double rho = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double theta = 1.0;
};

CovarianceParams covariance_params(const ModelParams& params);

struct SurrogateComponents {
  double U = 0.0;
  std::vector<double> V;
  SymmetricMatrix Z;
  std::uint64_t seed = 0;
};

struct SurrogateSample {
  SurrogateComponents components;
  SymmetricMatrix g_prime;  // G with its diagonal removed
};

/// Draws U, then V_1..V_n, then the upper triangle of Z row by row (diagonal
/// entries with variance 2), all from one generator seeded with `seed`.
SurrogateSample sample_surrogate(const ModelParams& params, std::uint64_t seed);

/// Assembles G = alpha U 11^T + beta (V 1^T + 1 V^T) + theta Z, diagonal kept.
SymmetricMatrix surrogate_full(const CovarianceParams& cov, const SurrogateComponents& c);

/// Same G' as sample_surrogate without keeping the components around.
SymmetricMatrix sample_surrogate_matrix(const ModelParams& params, std::uint64_t seed);

SymmetricMatrix laplacian(const SymmetricMatrix& x);
SymmetricMatrix laplacian_tilde(const SymmetricMatrix& x, int r);

/// Tr(Q_1 Q_2) = s^2 - s where s = |e1 ∩ e2|.
long trace_QQ(int n, int r, std::span<const Vertex> e1, std::span<const Vertex> e2);

struct LipschitzConstants {
  double delta_sq = 0.0;
  double gamma_sq = 0.0;
  double xi_sq = 0.0;
};

/// Exact overlap sums (rational arithmetic). Throws InternalError if any of
/// delta^2 <= r^2/n, gamma^2 <= r, xi^2 <= r/(r-1) + r^2/n fails.
LipschitzConstants lipschitz_constants(const ModelParams& params);

void write_matrix_csv(const SymmetricMatrix& m, const std::filesystem::path& path);
void write_matrix_binary(const SymmetricMatrix& m, const std::filesystem::path& path);
SymmetricMatrix read_matrix_binary(const std::filesystem::path& path);

}  // namespace hyperspec
