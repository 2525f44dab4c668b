#pragma once

#include <cstdint>
#include <random>

namespace hyperspec {

// One splitmix64 step; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// Per-trial seed: splitmix64 applied to master_seed + (index + 1) * golden gamma.
// Trials seeded this way are independent of scheduling order.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;

// Seeded generator with portable uniform/normal transforms, so a given seed
// produces identical streams across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform on (0, 1).
  double uniform_open();

  // Unbiased integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal via the Marsaglia polar method.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hyperspec
