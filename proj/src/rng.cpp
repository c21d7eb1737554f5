#include "dipo/rng.hpp"

#include <bit>
#include <cmath>

namespace dipo {

Rng::Rng(uint64_t seed, uint64_t stream) {
  state_ = 0u;
  inc_ = (stream << 1u) | 1u;
  next_u32();
  state_ += seed;
  next_u32();
}

uint32_t Rng::next_u32() {
  uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
  uint32_t rot = static_cast<uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
}

double Rng::uniform() {
  uint64_t hi = next_u32();
  uint64_t lo = next_u32();
  uint64_t bits = ((hi << 32) | lo) >> 11;  // 53 bits
  return static_cast<double>(bits) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

uint64_t Rng::uniform_index(uint64_t n) {
  // Rejection-free modulo bias is negligible for n << 2^64; use 64 bits.
  uint64_t hi = next_u32();
  uint64_t lo = next_u32();
  return ((hi << 32) | lo) % n;
}

std::array<uint64_t, 4> Rng::save_state() const {
  return {state_, inc_, std::bit_cast<uint64_t>(spare_),
          static_cast<uint64_t>(has_spare_)};
}

void Rng::load_state(const std::array<uint64_t, 4>& s) {
  state_ = s[0];
  inc_ = s[1];
  spare_ = std::bit_cast<double>(s[2]);
  has_spare_ = s[3] != 0;
}

Mat gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  require(rows >= 1 && cols >= 1, "gaussian: rows, cols must be >= 1");
  Mat out(rows, cols);
  double* p = out.data();
  for (Eigen::Index i = 0; i < rows * cols; ++i) p[i] = rng.normal();
  return out;
}

Mat uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  Mat out(rows, cols);
  double* p = out.data();
  for (Eigen::Index i = 0; i < rows * cols; ++i)
    p[i] = lo + (hi - lo) * rng.uniform();
  return out;
}

}  // namespace dipo
