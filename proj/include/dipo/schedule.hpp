#pragma once
#include "dipo/types.hpp"

namespace dipo {

// Discrete diffusion coefficients, 1-based in k (k = 1..K).
struct NoiseSchedule {
  int K = 0;
  VectorXd beta_v, alpha_v, alpha_bar_v, sigma_v;  // length K, index k-1

  double beta(int k) const { return beta_v(k - 1); }
  double alpha(int k) const { return alpha_v(k - 1); }
  double alpha_bar(int k) const { return alpha_bar_v(k - 1); }
  double sigma(int k) const { return sigma_v(k - 1); }
  void check_k(int k) const {
    require(k >= 1 && k <= K, "diffusion index k out of range");
  }
};

// Nichol-Dhariwal cosine schedule, s = 0.008, beta clipped to [1e-8, 0.999].
// alpha_bar is recomputed as the running product after clipping so the
// schedule stays self-consistent.
NoiseSchedule cosine_schedule(int K);

}  // namespace dipo
