#include "dipo/diffusion.hpp"

#include <cmath>

namespace dipo {

Mat forward_sample(const NoiseSchedule& sch, const Mat& a0, int k, const Mat& z) {
  sch.check_k(k);
  require(z.rows() == a0.rows() && z.cols() == a0.cols(),
          "forward_sample: z shape mismatch");
  double ab = sch.alpha_bar(k);
  return std::sqrt(ab) * a0 + std::sqrt(1.0 - ab) * z;
}

Mat ou_kernel_sample(const Mat& a0, double t, const Mat& z) {
  require(t >= 0, "ou_kernel_sample: t must be >= 0");
  return std::exp(-t) * a0 + std::sqrt(1.0 - std::exp(-2.0 * t)) * z;
}

Mat eps_net_input(const Mat& noisy, const Mat& states, int k,
                  const TimeEmbedConfig& te) {
  require(noisy.rows() == states.rows(), "eps_net_input: batch mismatch");
  Row emb = sinusoidal_embed(k, te);
  Mat X(noisy.rows(), noisy.cols() + states.cols() + te.dim);
  X << noisy, states, emb.replicate(noisy.rows(), 1);
  return X;
}

double dsm_loss_and_grads(const MlpModel& eps, const NoiseSchedule& sch,
                          const TimeEmbedConfig& te, const Mat& states,
                          const Mat& actions, const std::vector<int>& ks,
                          const Mat& z, Grads& g) {
  const Eigen::Index n = actions.rows();
  require(static_cast<Eigen::Index>(ks.size()) == n, "dsm: ks size mismatch");
  require(z.rows() == n && z.cols() == actions.cols(), "dsm: z shape mismatch");
  Mat X(n, actions.cols() + states.cols() + te.dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    sch.check_k(ks[i]);
    double ab = sch.alpha_bar(ks[i]);
    X.row(i) << std::sqrt(ab) * actions.row(i) + std::sqrt(1.0 - ab) * z.row(i),
        states.row(i), sinusoidal_embed(ks[i], te);
  }
  Tape tape;
  Mat out = mlp_forward(eps, X, &tape);
  Mat resid = out - z;
  double loss = resid.squaredNorm() / static_cast<double>(n);
  Mat dY = (2.0 / static_cast<double>(n)) * resid;
  mlp_backward(eps, tape, dY, g);
  return loss;
}

double dsm_loss_and_grads(const MlpModel& eps, const NoiseSchedule& sch,
                          const TimeEmbedConfig& te, const Row& state,
                          const Row& action, int k, const Row& z, Grads& g) {
  return dsm_loss_and_grads(eps, sch, te, Mat(state), Mat(action),
                            std::vector<int>{k}, Mat(z), g);
}

Mat ddpm_sample(const MlpModel& eps, const NoiseSchedule& sch,
                const TimeEmbedConfig& te, const Mat& states, int action_dim,
                const NoiseFn& noise) {
  const Eigen::Index n = states.rows();
  Mat a = noise(n, action_dim);
  for (int k = sch.K; k >= 1; --k) {
    Mat e = mlp_forward(eps, eps_net_input(a, states, k, te));
    double ak = sch.alpha(k);
    double bk = sch.beta(k);
    double abk = sch.alpha_bar(k);
    a = (a - (bk / std::sqrt(1.0 - abk)) * e) / std::sqrt(ak);
    if (k > 1) a += sch.sigma(k) * noise(n, action_dim);
  }
  return a;
}

Mat ddpm_sample(const MlpModel& eps, const NoiseSchedule& sch,
                const TimeEmbedConfig& te, const Mat& states, int action_dim,
                Rng& rng) {
  return ddpm_sample(eps, sch, te, states, action_dim,
                     [&rng](Eigen::Index r, Eigen::Index c) {
                       return gaussian(rng, r, c);
                     });
}

Mat analytic_gaussian_score(const Row& mu, double var0, double t, const Mat& X) {
  require(var0 > 0, "analytic_gaussian_score: variance must be > 0");
  require(t >= 0, "analytic_gaussian_score: t must be >= 0");
  double decay = std::exp(-t);
  double vt = decay * decay * var0 + 1.0 - decay * decay;
  return -((X.rowwise() - decay * mu.row(0)) / vt);
}

namespace {
Mat eval_score(const ScoreSource& src, const SdeSamplerConfig& cfg, const Mat& X,
               double t) {
  if (const auto* g = std::get_if<AnalyticGaussian>(&src))
    return analytic_gaussian_score(g->mean, g->var0, t, X);
  const auto& np = std::get<NoisePredictor>(src);
  // Forward time t maps onto the discrete ladder: k = round(t / h).
  int k = static_cast<int>(std::llround(t / cfg.step()));
  k = std::min(std::max(k, 1), np.sch->K);
  Mat states = np.state.replicate(X.rows(), 1);
  Mat e = mlp_forward(*np.eps, eps_net_input(X, states, k, *np.te));
  return -e / std::sqrt(1.0 - np.sch->alpha_bar(k));
}
}  // namespace

Mat exp_integrator_sample(const ScoreSource& score, const SdeSamplerConfig& cfg,
                          Rng& rng, Eigen::Index n, int dim) {
  require(cfg.T > 0 && cfg.K >= 1, "exp_integrator: invalid config");
  double h = cfg.step();
  double eh = std::exp(h);
  double noise_scale = std::sqrt(std::exp(2.0 * h) - 1.0);
  Mat x = gaussian(rng, n, dim);
  for (int k = 0; k < cfg.K; ++k) {
    double t = cfg.T - h * k;
    Mat s = eval_score(score, cfg, x, t);
    x = eh * x + 2.0 * (eh - 1.0) * s + noise_scale * gaussian(rng, n, dim);
  }
  return x;
}

double gaussian_kl(const Row& mean_a, const Row& var_a, const Row& mean_b,
                   const Row& var_b) {
  require((var_a.array() > 0).all() && (var_b.array() > 0).all(),
          "gaussian_kl: variances must be > 0");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < mean_a.cols(); ++i) {
    double r = var_a(i) / var_b(i);
    double dm = mean_a(i) - mean_b(i);
    kl += 0.5 * (r + dm * dm / var_b(i) - 1.0 - std::log(r));
  }
  return kl;
}

VectorXd mode_coverage(const Mat& samples, const Mat& modes, double radius) {
  require(radius > 0, "mode_coverage: radius must be > 0");
  VectorXd frac = VectorXd::Zero(modes.rows());
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    Eigen::Index best = 0;
    double best_d = (samples.row(i) - modes.row(0)).norm();
    for (Eigen::Index m = 1; m < modes.rows(); ++m) {
      double d = (samples.row(i) - modes.row(m)).norm();
      if (d < best_d) {
        best_d = d;
        best = m;
      }
    }
    if (best_d <= radius) frac(best) += 1.0;
  }
  if (samples.rows() > 0) frac /= static_cast<double>(samples.rows());
  return frac;
}

}  // namespace dipo
