#include "hyperspec/gham.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>

#include "hyperspec/errors.hpp"
#include "hyperspec/rng.hpp"

namespace hyperspec {

double SymmetricMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : a_) s += v * v;
  return std::sqrt(s);
}

bool SymmetricMatrix::all_finite() const {
  return std::all_of(a_.begin(), a_.end(), [](double v) { return std::isfinite(v); });
}

SymmetricMatrix SymmetricMatrix::scaled(double factor) const {
  SymmetricMatrix out = *this;
  for (double& v : out.a_) v *= factor;
  return out;
}

SymmetricMatrix adjacency_from_hypergraph(const HypergraphSample& h) {
  const auto n = static_cast<std::size_t>(h.params().n);
  SymmetricMatrix a(n);
  auto& s = a.storage();
  for (std::size_t l = 0; l < h.edge_count(); ++l) {
    const auto e = h.edge(l);
    for (std::size_t x = 0; x < e.size(); ++x) {
      for (std::size_t y = x + 1; y < e.size(); ++y) {
        const std::size_t i = e[x] - 1, j = e[y] - 1;
        s[i * n + j] += 1.0;
        s[j * n + i] += 1.0;
      }
    }
  }
  return a;
}

SymmetricMatrix gham_from_adjacency(const SymmetricMatrix& adjacency, const ModelParams& params) {
  if (!(params.p > 0.0 && params.p < 1.0)) {
    throw DomainError("gham: p must lie strictly inside (0, 1); entry variance is zero otherwise");
  }
  if (adjacency.dim() != static_cast<std::size_t>(params.n)) {
    throw DomainError("gham: adjacency dimension does not match n");
  }
  const double pair_degree = params.pair_degree().get_d();
  const double mean = params.p * pair_degree;
  const double scale = 1.0 / (std::sqrt(params.p * (1.0 - params.p)) * std::sqrt(pair_degree));
  const std::size_t n = adjacency.dim();
  SymmetricMatrix h(n);
  auto& s = h.storage();
  const auto src = adjacency.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) s[i * n + j] = (src[i * n + j] - mean) * scale;
    }
  }
  return h;
}

SymmetricMatrix gham_from_weights(int n, int r, std::span<const double> weights) {
  const ModelParams params = ModelParams::make(n, r, 0.5);
  const BigInt total = params.total_edges();
  if (total != BigInt(static_cast<unsigned long>(weights.size()))) {
    throw DomainError("gham_from_weights: expected one weight per hyperedge (C(n, r) of them)");
  }
  const double scale = 1.0 / std::sqrt(params.pair_degree().get_d());
  const auto dim = static_cast<std::size_t>(n);
  SymmetricMatrix h(dim);
  auto& s = h.storage();
  std::size_t l = 0;
  for_each_combination(n, r, [&](std::span<const Vertex> e) {
    const double w = weights[l++] * scale;
    for (std::size_t x = 0; x < e.size(); ++x) {
      for (std::size_t y = x + 1; y < e.size(); ++y) {
        const std::size_t i = e[x] - 1, j = e[y] - 1;
        s[i * dim + j] += w;
        s[j * dim + i] += w;
      }
    }
  });
  return h;
}

CovarianceParams covariance_params(const ModelParams& params) {
  const double n = params.n, r = params.r;
  CovarianceParams c;
  if (params.r == 2) return c;
  c.gamma = (r - 2.0) / (n - 2.0);
  c.rho = params.r == 3 ? 0.0 : (r - 2.0) * (r - 3.0) / ((n - 2.0) * (n - 3.0));
  auto root = [](double v, const char* what) {
    if (v < -1e-12) throw InternalError(std::string("covariance_params: negative radicand for ") + what);
    return std::sqrt(std::max(v, 0.0));
  };
  c.alpha = root(c.rho, "alpha");
  c.beta = root(c.gamma - c.rho, "beta");
  c.theta = root(1.0 - 2.0 * c.gamma + c.rho, "theta");
  return c;
}

namespace {

void draw_components(Rng& rng, std::size_t n, double& u, std::vector<double>& v) {
  u = rng.normal();
  v.resize(n);
  for (auto& x : v) x = rng.normal();
}

}  // namespace

SurrogateSample sample_surrogate(const ModelParams& params, std::uint64_t seed) {
  const CovarianceParams cov = covariance_params(params);
  const auto n = static_cast<std::size_t>(params.n);
  Rng rng(seed);
  SurrogateSample out;
  auto& c = out.components;
  c.seed = seed;
  draw_components(rng, n, c.U, c.V);
  c.Z = SymmetricMatrix(n);
  const double sqrt2 = std::sqrt(2.0);
  for (std::size_t i = 0; i < n; ++i) {
    c.Z.set(i, i, sqrt2 * rng.normal());
    for (std::size_t j = i + 1; j < n; ++j) c.Z.set(i, j, rng.normal());
  }
  out.g_prime = surrogate_full(cov, c);
  for (std::size_t i = 0; i < n; ++i) out.g_prime.set(i, i, 0.0);
  return out;
}

SymmetricMatrix surrogate_full(const CovarianceParams& cov, const SurrogateComponents& c) {
  const std::size_t n = c.V.size();
  if (c.Z.dim() != n) throw DomainError("surrogate: Z and V dimensions differ");
  SymmetricMatrix g(n);
  const double shift = cov.alpha * c.U;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      g.set(i, j, shift + cov.beta * (c.V[i] + c.V[j]) + cov.theta * c.Z(i, j));
    }
  }
  return g;
}

SymmetricMatrix sample_surrogate_matrix(const ModelParams& params, std::uint64_t seed) {
  const CovarianceParams cov = covariance_params(params);
  const auto n = static_cast<std::size_t>(params.n);
  Rng rng(seed);
  double u = 0.0;
  std::vector<double> v;
  draw_components(rng, n, u, v);
  const double shift = cov.alpha * u;
  SymmetricMatrix g(n);
  auto& s = g.storage();
  for (std::size_t i = 0; i < n; ++i) {
    rng.normal();  // diagonal of Z, discarded but drawn to keep the stream aligned
    const double vi = shift + cov.beta * v[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const double x = vi + cov.beta * v[j] + cov.theta * rng.normal();
      s[i * n + j] = x;
      s[j * n + i] = x;
    }
  }
  return g;
}

SymmetricMatrix laplacian(const SymmetricMatrix& x) { return laplacian_tilde(x, 2); }

SymmetricMatrix laplacian_tilde(const SymmetricMatrix& x, int r) {
  if (r < 2) throw DomainError("laplacian_tilde: r must be at least 2");
  const std::size_t n = x.dim();
  const double factor = 1.0 / (r - 1);
  SymmetricMatrix out(n);
  auto& s = out.storage();
  const auto src = x.data();
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row_sum += src[i * n + j];
      s[i * n + j] = -src[i * n + j];
    }
    s[i * n + i] += row_sum * factor;
  }
  return out;
}

long trace_QQ(int n, int r, std::span<const Vertex> e1, std::span<const Vertex> e2) {
  auto valid = [&](std::span<const Vertex> e) {
    if (e.size() != static_cast<std::size_t>(r)) return false;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] < 1 || e[i] > static_cast<Vertex>(n)) return false;
      if (i > 0 && e[i] <= e[i - 1]) return false;
    }
    return true;
  };
  if (!valid(e1) || !valid(e2)) throw DomainError("trace_QQ: edges must be sorted r-subsets of [1, n]");
  long s = 0;
  std::size_t a = 0, b = 0;
  while (a < e1.size() && b < e2.size()) {
    if (e1[a] < e2[b]) {
      ++a;
    } else if (e2[b] < e1[a]) {
      ++b;
    } else {
      ++s;
      ++a;
      ++b;
    }
  }
  return s * s - s;
}

LipschitzConstants lipschitz_constants(const ModelParams& params) {
  const long n = params.n, r = params.r;
  mpq_class delta(0), gamma(0), xi(0);
  for (long s = 0; s <= r; ++s) {
    const mpq_class count(edge_overlap_count(n, r, s));
    delta += mpq_class(s * s - s) * count;
    gamma += mpq_class((r * r - 2 * r) * s + s * s) * count;
    xi += mpq_class(s * s) * count;
  }
  const mpq_class nN = mpq_class(n) * mpq_class(params.pair_degree());
  delta /= nN;
  xi /= nN;
  gamma /= nN * r;
  delta.canonicalize();
  gamma.canonicalize();
  xi.canonicalize();

  const mpq_class r2_over_n(r * r, n);
  if (delta > r2_over_n) throw InternalError("lipschitz_constants: delta^2 exceeds r^2/n");
  if (gamma > mpq_class(r)) throw InternalError("lipschitz_constants: gamma^2 exceeds r");
  if (xi > mpq_class(r, r - 1) + r2_over_n) {
    throw InternalError("lipschitz_constants: xi^2 exceeds r/(r-1) + r^2/n");
  }
  return LipschitzConstants{delta.get_d(), gamma.get_d(), xi.get_d()};
}

void write_matrix_csv(const SymmetricMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  for (std::size_t i = 0; i < m.dim(); ++i) {
    for (std::size_t j = 0; j < m.dim(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

void put_le(std::ostream& out, std::uint64_t bits, int bytes) {
  char buf[8];
  for (int b = 0; b < bytes; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  out.write(buf, bytes);
}

std::uint64_t get_le(std::istream& in, int bytes) {
  unsigned char buf[8] = {};
  in.read(reinterpret_cast<char*>(buf), bytes);
  std::uint64_t bits = 0;
  for (int b = 0; b < bytes; ++b) bits |= std::uint64_t{buf[b]} << (8 * b);
  return bits;
}

}  // namespace

void write_matrix_binary(const SymmetricMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write("GHAM", 4);
  put_le(out, static_cast<std::uint32_t>(m.dim()), 4);
  for (std::size_t i = 0; i < m.dim(); ++i) {
    for (std::size_t j = i; j < m.dim(); ++j) put_le(out, std::bit_cast<std::uint64_t>(m(i, j)), 8);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

SymmetricMatrix read_matrix_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "GHAM", 4) != 0) throw ParseError(path.string() + ": bad magic");
  const auto n = static_cast<std::size_t>(get_le(in, 4));
  SymmetricMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) m.set(i, j, std::bit_cast<double>(get_le(in, 8)));
  }
  if (!in) throw ParseError(path.string() + ": truncated matrix data");
  if (!m.all_finite()) throw ParseError(path.string() + ": non-finite entries");
  return m;
}

}  // namespace hyperspec
