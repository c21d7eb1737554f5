#include "dipo/schedule.hpp"

#include <cmath>

namespace dipo {

NoiseSchedule cosine_schedule(int K) {
  require(K >= 2, "cosine_schedule: K must be >= 2");
  const double s = 0.008;
  auto f = [&](double k) {
    double x = ((k / K + s) / (1.0 + s)) * M_PI / 2.0;
    double c = std::cos(x);
    return c * c;
  };
  NoiseSchedule sch;
  sch.K = K;
  sch.beta_v.resize(K);
  sch.alpha_v.resize(K);
  sch.alpha_bar_v.resize(K);
  sch.sigma_v.resize(K);
  double f0 = f(0);
  double prev_abar = 1.0;  // alpha_bar[0] == 1
  double abar_prod = 1.0;
  for (int k = 1; k <= K; ++k) {
    double abar = f(k) / f0;
    double beta = 1.0 - abar / prev_abar;
    beta = std::min(std::max(beta, 1e-8), 0.999);
    prev_abar = abar;
    double alpha = 1.0 - beta;
    double abar_prev_stored = abar_prod;
    abar_prod *= alpha;
    sch.beta_v(k - 1) = beta;
    sch.alpha_v(k - 1) = alpha;
    sch.alpha_bar_v(k - 1) = abar_prod;
    sch.sigma_v(k - 1) =
        std::sqrt((1.0 - abar_prev_stored) / (1.0 - abar_prod) * beta);
  }
  return sch;
}

}  // namespace dipo
