#pragma once
#include <array>
#include <cstdint>

#include "dipo/types.hpp"

namespace dipo {

// PCG32 counter generator + Box-Muller. Bit-reproducible across platforms:
// the full stream is a deterministic function of (seed, stream) alone.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0);

  uint32_t next_u32();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Standard normal; caches the Box-Muller spare.
  double normal();
  // Uniform integer in [0, n).
  uint64_t uniform_index(uint64_t n);

  // Full state including the Box-Muller spare, for checkpointing.
  std::array<uint64_t, 4> save_state() const;
  void load_state(const std::array<uint64_t, 4>& s);

 private:
  uint64_t state_;
  uint64_t inc_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// i.i.d. standard-normal entries, filled in row-major order.
Mat gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols);
// i.i.d. uniform entries in [lo, hi).
Mat uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi);

}  // namespace dipo
