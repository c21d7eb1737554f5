#include <doctest.h>

#include <cmath>

#include "dipo/diag.hpp"
#include "dipo/diffusion.hpp"
#include "dipo/schedule.hpp"

using namespace dipo;

namespace {

// Zero noise predictor with the standard input layout.
MlpModel zero_net(int action_dim, int state_dim, const TimeEmbedConfig& te) {
  Rng rng(0);
  MlpModel m = make_mlp({action_dim + state_dim + te.dim, action_dim}, rng);
  m.W[0].setZero();
  m.b[0].setZero();
  return m;
}

// Hand-buildable schedule with prescribed beta values.
NoiseSchedule manual_schedule(const std::vector<double>& betas) {
  NoiseSchedule s;
  s.K = static_cast<int>(betas.size());
  s.beta_v.resize(s.K);
  s.alpha_v.resize(s.K);
  s.alpha_bar_v.resize(s.K);
  s.sigma_v.resize(s.K);
  double prod = 1.0, prev = 1.0;
  for (int i = 0; i < s.K; ++i) {
    s.beta_v(i) = betas[i];
    s.alpha_v(i) = 1.0 - betas[i];
    prod *= s.alpha_v(i);
    s.alpha_bar_v(i) = prod;
    s.sigma_v(i) = std::sqrt((1.0 - prev) / (1.0 - prod) * betas[i]);
    prev = prod;
  }
  return s;
}

}  // namespace

TEST_CASE("cosine schedule: shape and invariants") {
  NoiseSchedule s = cosine_schedule(100);
  REQUIRE(s.K == 100);
  double prod = 1.0;
  for (int k = 1; k <= 100; ++k) {
    CHECK(s.beta(k) > 0.0);
    CHECK(s.beta(k) <= 0.999);
    CHECK(s.alpha(k) == doctest::Approx(1.0 - s.beta(k)).epsilon(1e-15));
    prod *= s.alpha(k);
    CHECK(s.alpha_bar(k) == doctest::Approx(prod).epsilon(1e-12));
    if (k > 1) CHECK(s.alpha_bar(k) < s.alpha_bar(k - 1));
    CHECK(s.sigma(k) >= 0.0);
    CHECK(s.sigma(k) * s.sigma(k) <= s.beta(k) + 1e-15);
  }
  CHECK(s.alpha_bar(1) > 0.9);    // almost no noise at the first rung
  CHECK(s.alpha_bar(100) < 0.01); // nearly pure noise at the last
  CHECK_THROWS_AS(s.check_k(0), ValidationError);
  CHECK_THROWS_AS(s.check_k(101), ValidationError);
}

TEST_CASE("cosine schedule: sigma matches the posterior formula") {
  NoiseSchedule s = cosine_schedule(50);
  for (int k = 2; k <= 50; ++k) {
    double expect =
        std::sqrt((1.0 - s.alpha_bar(k - 1)) / (1.0 - s.alpha_bar(k)) * s.beta(k));
    CHECK(s.sigma(k) == doctest::Approx(expect).epsilon(1e-12));
  }
  // alpha_bar_0 = 1 makes the first posterior step deterministic
  CHECK(s.sigma(1) == doctest::Approx(0.0));
}

TEST_CASE("forward_sample: hand values and limits") {
  NoiseSchedule s = manual_schedule({0.75});  // alpha_bar_1 = 0.25
  Mat a0(1, 2), z(1, 2);
  a0 << 2.0, 1.0;
  z << 1.0, 1.0;
  Mat x = forward_sample(s, a0, 1, z);
  CHECK(x(0, 0) == doctest::Approx(0.5 * 2.0 + std::sqrt(0.75)).epsilon(1e-12));
  CHECK(x(0, 1) == doctest::Approx(0.5 * 1.0 + std::sqrt(0.75)).epsilon(1e-12));

  NoiseSchedule tiny = manual_schedule({1e-12});  // alpha_bar ~ 1: x ~ a0
  Mat y = forward_sample(tiny, a0, 1, z);
  CHECK((y - a0).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("ou_kernel_sample: hand value at t = ln 2 and t = 0") {
  Mat a0(1, 1), z(1, 1);
  a0 << 2.0;
  z << 1.0;
  Mat x = ou_kernel_sample(a0, std::log(2.0), z);
  CHECK(x(0, 0) == doctest::Approx(1.0 + std::sqrt(0.75)).epsilon(1e-12));
  Mat x0 = ou_kernel_sample(a0, 0.0, z);
  CHECK(x0(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("ou kernel empirical moments match the closed form") {
  Rng rng(21);
  Mat a0(1, 2);
  a0 << 2.0, -1.0;
  const long n = 50000;
  for (double t : {0.25, 1.0}) {
    Mat A0 = a0.replicate(n, 1);
    Mat Z = gaussian(rng, n, 2);
    Mat X = ou_kernel_sample(A0, t, Z);
    double vexp = 1.0 - std::exp(-2.0 * t);
    for (int j = 0; j < 2; ++j) {
      double mean = X.col(j).mean();
      double var = (X.col(j).array() - mean).square().mean();
      double se = std::sqrt(vexp / n);
      CHECK(std::abs(mean - std::exp(-t) * a0(0, j)) < 4 * se);
      CHECK(var == doctest::Approx(vexp).epsilon(0.05));
    }
  }
}

TEST_CASE("eps_net_input layout: [noisy | state | time embed]") {
  TimeEmbedConfig te;
  te.dim = 4;
  Mat noisy(2, 2), states(2, 3);
  noisy << 1, 2, 3, 4;
  states << 5, 6, 7, 8, 9, 10;
  Mat X = eps_net_input(noisy, states, 2, te);
  REQUIRE(X.rows() == 2);
  REQUIRE(X.cols() == 2 + 3 + 4);
  CHECK(X(0, 0) == 1);
  CHECK(X(0, 2) == 5);
  CHECK(X(1, 4) == 10);
  Row e = sinusoidal_embed(2, te);
  for (int j = 0; j < 4; ++j) {
    CHECK(X(0, 5 + j) == e(j));
    CHECK(X(1, 5 + j) == e(j));
  }
}

TEST_CASE("dsm loss: zero net reduces to mean ||z||^2, zero noise to zero") {
  TimeEmbedConfig te;
  NoiseSchedule s = cosine_schedule(10);
  MlpModel eps = zero_net(2, 1, te);
  Mat states = Mat::Zero(3, 1), actions(3, 2), z(3, 2);
  actions.setConstant(0.3);
  z << 1, 0, 0, 2, 1, 1;
  std::vector<int> ks = {1, 5, 10};
  Grads g;
  double loss = dsm_loss_and_grads(eps, s, te, states, actions, ks, z, g);
  CHECK(loss == doctest::Approx((1.0 + 4.0 + 2.0) / 3.0).epsilon(1e-12));

  Mat z0 = Mat::Zero(3, 2);
  double loss0 = dsm_loss_and_grads(eps, s, te, states, actions, ks, z0, g);
  CHECK(loss0 == doctest::Approx(0.0));
  for (const Mat& d : g.dW) CHECK(d.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dsm gradients match finite differences") {
  Rng rng(13);
  TimeEmbedConfig te;
  te.dim = 8;
  NoiseSchedule s = cosine_schedule(20);
  MlpModel eps = make_mlp({1 + 1 + te.dim, 12, 1}, rng);
  Mat states = gaussian(rng, 4, 1), actions = gaussian(rng, 4, 1);
  Mat z = gaussian(rng, 4, 1);
  std::vector<int> ks = {2, 7, 13, 20};
  Grads g;
  dsm_loss_and_grads(eps, s, te, states, actions, ks, z, g);
  const double h = 1e-6;
  for (int l = 0; l < eps.n_layers(); ++l)
    for (int idx = 0; idx < 6; ++idx) {
      int i = idx % eps.W[l].rows(), j = idx % eps.W[l].cols();
      double save = eps.W[l](i, j);
      Grads tmp;
      eps.W[l](i, j) = save + h;
      double lp = dsm_loss_and_grads(eps, s, te, states, actions, ks, z, tmp);
      eps.W[l](i, j) = save - h;
      double lm = dsm_loss_and_grads(eps, s, te, states, actions, ks, z, tmp);
      eps.W[l](i, j) = save;
      double fd = (lp - lm) / (2 * h);
      CHECK(std::abs(g.dW[l](i, j) - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("dsm single-sample overload agrees with a batch of one") {
  Rng rng(14);
  TimeEmbedConfig te;
  NoiseSchedule s = cosine_schedule(30);
  MlpModel eps = make_mlp({2 + 2 + te.dim, 16, 2}, rng);
  Row state = gaussian(rng, 1, 2), action = gaussian(rng, 1, 2);
  Row z = gaussian(rng, 1, 2);
  Grads g1, g2;
  double a = dsm_loss_and_grads(eps, s, te, Mat(state), Mat(action),
                                std::vector<int>{9}, Mat(z), g1);
  double b = dsm_loss_and_grads(eps, s, te, state, action, 9, z, g2);
  CHECK(a == doctest::Approx(b).epsilon(1e-14));
  for (int l = 0; l < eps.n_layers(); ++l)
    CHECK((g1.dW[l] - g2.dW[l]).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("ddpm sampler: zero net telescopes the initial draw") {
  TimeEmbedConfig te;
  NoiseSchedule s = cosine_schedule(50);
  MlpModel eps = zero_net(2, 1, te);
  Mat states = Mat::Zero(3, 1);
  Mat v(3, 2);
  v << 1, -1, 0.5, 2, 0, 0.25;
  int calls = 0;
  NoiseFn noise = [&](Eigen::Index r, Eigen::Index c) -> Mat {
    ++calls;
    return calls == 1 ? v : Mat(Mat::Zero(r, c));
  };
  Mat out = ddpm_sample(eps, s, te, states, 2, noise);
  // a_{k-1} = a_k / sqrt(alpha_k) each step, so a_0 = a_K / sqrt(alpha_bar_K).
  Mat expect = v / std::sqrt(s.alpha_bar(50));
  CHECK((out - expect).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(calls >= 50);  // initial draw plus per-step noise
}

TEST_CASE("ddpm sampler: K = 1 is a single deterministic step") {
  TimeEmbedConfig te;
  NoiseSchedule s = manual_schedule({0.5});
  Rng seed_rng(3);
  MlpModel eps = make_mlp({1 + 1 + te.dim, 1}, seed_rng);
  Mat states = Mat::Zero(1, 1);
  Mat start(1, 1);
  start << 0.8;
  int calls = 0;
  NoiseFn noise = [&](Eigen::Index r, Eigen::Index c) -> Mat {
    ++calls;
    return calls == 1 ? start : Mat(Mat::Zero(r, c));
  };
  Mat out = ddpm_sample(eps, s, te, states, 1, noise);
  Mat in = eps_net_input(start, states, 1, te);
  double e = mlp_forward(eps, in)(0, 0);
  double expect = (0.8 - s.beta(1) / std::sqrt(1.0 - s.alpha_bar(1)) * e) /
                  std::sqrt(s.alpha(1));
  CHECK(out(0, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ddpm sampler: zero-net output variance matches the closed form") {
  TimeEmbedConfig te;
  NoiseSchedule s = cosine_schedule(25);
  MlpModel eps = zero_net(1, 1, te);
  const long n = 40000;
  Mat states = Mat::Zero(n, 1);
  Rng rng(17);
  Mat out = ddpm_sample(eps, s, te, states, 1, rng);
  // Var recursion: v_{k-1} = v_k / alpha_k + sigma_k^2, v_K = 1.
  double v = 1.0;
  for (int k = 25; k >= 1; --k) v = v / s.alpha(k) + s.sigma(k) * s.sigma(k);
  double mean = out.col(0).mean();
  double var = (out.col(0).array() - mean).square().mean();
  double se_mean = std::sqrt(v / n), se_var = v * std::sqrt(2.0 / n);
  CHECK(std::abs(mean) < 4 * se_mean);
  CHECK(std::abs(var - v) < 4 * se_var);
}

TEST_CASE("ddpm sampler recovers a degenerate target after training") {
  Rng rng(23);
  TimeEmbedConfig te;
  NoiseSchedule s = cosine_schedule(40);
  const long n = 512;
  Mat states = Mat::Zero(n, 1);
  Mat actions = Mat::Constant(n, 1, 0.7);
  MlpModel eps = train_dsm_model(states, actions, s, te, 64, 2500, 128, 1e-3, rng);
  Mat samples = ddpm_sample(eps, s, te, Mat(Mat::Zero(2000, 1)), 1, rng);
  CHECK(std::abs(samples.col(0).mean() - 0.7) < 0.1);
}

TEST_CASE("analytic gaussian score: zeros at the diffused mean, known slope") {
  Row mu(1);
  mu << 3.0;
  double t = 0.5, var0 = 0.25;
  double m = std::exp(-t) * 3.0;
  double v = std::exp(-2 * t) * var0 + 1.0 - std::exp(-2 * t);
  Mat X(2, 1);
  X << m, m + 1.0;
  Mat S = analytic_gaussian_score(mu, var0, t, X);
  CHECK(S(0, 0) == doctest::Approx(0.0));
  CHECK(S(1, 0) == doctest::Approx(-1.0 / v).epsilon(1e-12));
}

TEST_CASE("exp integrator: N(0,1) score has the standard normal as fixed law") {
  Rng rng(29);
  AnalyticGaussian g{Row::Zero(1), 1.0};
  SdeSamplerConfig cfg;
  cfg.T = 4.0;
  cfg.K = 200;
  const long n = 20000;
  Mat out = exp_integrator_sample(g, cfg, rng, n, 1);
  double mean = out.col(0).mean();
  double var = (out.col(0).array() - mean).square().mean();
  CHECK(std::abs(mean) < 4.0 / std::sqrt((double)n));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("exp integrator: recovers N(3, 0.25) from the analytic score") {
  Rng rng(31);
  Row mu(1);
  mu << 3.0;
  AnalyticGaussian g{mu, 0.25};
  SdeSamplerConfig cfg;  // T = 6, K = 600
  const long n = 20000;
  Mat out = exp_integrator_sample(g, cfg, rng, n, 1);
  double mean = out.col(0).mean();
  double var = (out.col(0).array() - mean).square().mean();
  CHECK(std::abs(mean - 3.0) < 0.05);
  CHECK(std::abs(var - 0.25) < 0.05);
}

TEST_CASE("gaussian_kl: reference values") {
  Row z1 = Row::Zero(1), o1 = Row::Ones(1);
  CHECK(gaussian_kl(z1, o1, z1, o1) == doctest::Approx(0.0));
  Row m(1);
  m << 1.0;
  CHECK(gaussian_kl(m, o1, z1, o1) == doctest::Approx(0.5).epsilon(1e-12));
  Row v2(1);
  v2 << 2.0;
  // KL(N(0,1) || N(0,2)) = 0.5 (ln 2 + 1/2 - 1)
  CHECK(gaussian_kl(z1, o1, z1, v2) ==
        doctest::Approx(0.5 * (std::log(2.0) - 0.5)).epsilon(1e-12));
  // Additivity over independent dimensions
  Row m2(2), one2 = Row::Ones(2);
  m2 << 1.0, 1.0;
  CHECK(gaussian_kl(m2, one2, Row::Zero(2), one2) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mode_coverage: assignment and fractions") {
  Mat modes(2, 2);
  modes << 0, 0, 10, 0;
  Mat samples(4, 2);
  samples << 0.1, 0.0, -0.2, 0.1, 9.9, 0.05, 5.0, 0.0;  // last is uncovered
  VectorXd cov = mode_coverage(samples, modes, 0.5);
  CHECK(cov(0) == doctest::Approx(0.5));
  CHECK(cov(1) == doctest::Approx(0.25));

  Rng rng(37);
  Mat four(4, 2);
  four << 0, 2, 0, -2, 2, 0, -2, 0;
  const long n = 20000;
  Mat pts(n, 2);
  for (long i = 0; i < n; ++i)
    pts.row(i) = four.row(rng.uniform_index(4)) + 0.05 * gaussian(rng, 1, 2);
  VectorXd c = mode_coverage(pts, four, 0.6);
  for (int g = 0; g < 4; ++g) CHECK(c(g) == doctest::Approx(0.25).epsilon(0.08));
  CHECK(c.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("trained noise predictor approximates the analytic score") {
  Rng rng(41);
  NoiseSchedule s = cosine_schedule(100);
  TimeEmbedConfig te;
  const long n = 4000;
  Mat actions = 1.5 + 0.5 * gaussian(rng, n, 1).array();
  Mat states = Mat::Zero(n, 1);
  MlpModel eps = train_dsm_model(states, actions, s, te, 64, 4000, 128, 1e-3, rng);
  int k = 30;
  double abar = s.alpha_bar(k);
  Mat grid(41, 1);
  for (int i = 0; i < 41; ++i) grid(i, 0) = 0.5 + 2.0 * i / 40.0;
  Mat in = eps_net_input(grid, Mat::Zero(41, 1), k, te);
  Mat pred = mlp_forward(eps, in);
  double mse = 0;
  for (int i = 0; i < 41; ++i) {
    double implied = -pred(i, 0) / std::sqrt(1.0 - abar);
    double exact = -(grid(i, 0) - std::sqrt(abar) * 1.5) /
                   (abar * 0.25 + 1.0 - abar);
    mse += (implied - exact) * (implied - exact);
  }
  mse /= 41;
  CHECK(mse < 0.1);
}
