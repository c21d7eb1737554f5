#pragma once
#include <functional>
#include <variant>
#include <vector>

#include "dipo/nn.hpp"
#include "dipo/rng.hpp"
#include "dipo/schedule.hpp"

namespace dipo {

// Discrete forward kernel: sqrt(abar_k) a0 + sqrt(1 - abar_k) z.
Mat forward_sample(const NoiseSchedule& sch, const Mat& a0, int k, const Mat& z);

// Continuous OU kernel at time t: e^{-t} a0 + sqrt(1 - e^{-2t}) z.
Mat ou_kernel_sample(const Mat& a0, double t, const Mat& z);

// Noise-predictor input layout: [noisy action | state | time embedding].
Mat eps_net_input(const Mat& noisy, const Mat& states, int k,
                  const TimeEmbedConfig& te);

// Denoising score-matching loss over a batch; mean of ||z - eps||^2 per row.
// ks holds the per-row diffusion index. Returns the loss; grads accumulate
// into g (replacing its contents).
double dsm_loss_and_grads(const MlpModel& eps, const NoiseSchedule& sch,
                          const TimeEmbedConfig& te, const Mat& states,
                          const Mat& actions, const std::vector<int>& ks,
                          const Mat& z, Grads& g);

// Single-sample convenience overload.
double dsm_loss_and_grads(const MlpModel& eps, const NoiseSchedule& sch,
                          const TimeEmbedConfig& te, const Row& state,
                          const Row& action, int k, const Row& z, Grads& g);

using NoiseFn = std::function<Mat(Eigen::Index, Eigen::Index)>;

// Backward DDPM sampler, k = K..1, z_1 = 0. One row per state; returns
// a_hat_0 (batch x action_dim). The noise source is injectable for tests.
Mat ddpm_sample(const MlpModel& eps, const NoiseSchedule& sch,
                const TimeEmbedConfig& te, const Mat& states, int action_dim,
                const NoiseFn& noise);
Mat ddpm_sample(const MlpModel& eps, const NoiseSchedule& sch,
                const TimeEmbedConfig& te, const Mat& states, int action_dim,
                Rng& rng);

// Score of the OU-diffused Gaussian N(mu, var0 I) at forward time t:
// -(x - e^{-t} mu) / (e^{-2t} var0 + 1 - e^{-2t}), row-wise over X.
Mat analytic_gaussian_score(const Row& mu, double var0, double t, const Mat& X);

struct AnalyticGaussian {
  Row mean;
  double var0;
};
struct NoisePredictor {
  const MlpModel* eps;
  const NoiseSchedule* sch;
  const TimeEmbedConfig* te;
  Row state;
};
using ScoreSource = std::variant<AnalyticGaussian, NoisePredictor>;

struct SdeSamplerConfig {
  double T = 6.0;
  int K = 600;
  double step() const { return T / K; }
};

// Exponential-integrator reverse sampler: per step
//   x <- e^h x + 2 (e^h - 1) S(x, T - t_k) + sqrt(e^{2h} - 1) z_k,
// starting from x_0 ~ N(0, I); returns x_{t_K}. Batched: n independent rows.
Mat exp_integrator_sample(const ScoreSource& score, const SdeSamplerConfig& cfg,
                          Rng& rng, Eigen::Index n, int dim);

// Diagonal-Gaussian KL(a || b); means are 1 x d rows, variances per-dim.
double gaussian_kl(const Row& mean_a, const Row& var_a, const Row& mean_b,
                   const Row& var_b);

// Fraction of samples within radius of each mode; nearest-mode assignment.
VectorXd mode_coverage(const Mat& samples, const Mat& modes, double radius);

}  // namespace dipo
