#include "dipo/nn.hpp"

#include <cmath>

namespace dipo {

namespace {
double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}
double sigmoid(double x) {
  if (x >= 0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

double mish(double x) { return x * std::tanh(softplus(x)); }

double mish_grad(double x) {
  double t = std::tanh(softplus(x));
  return t + x * (1.0 - t * t) * sigmoid(x);
}

Row sinusoidal_embed(int k, const TimeEmbedConfig& cfg) {
  require(cfg.dim >= 2 && cfg.dim % 2 == 0, "time embed dim must be even, >= 2");
  require(k >= 0, "sinusoidal_embed: k must be >= 0");
  int half = cfg.dim / 2;
  Row e(cfg.dim);
  for (int i = 0; i < half; ++i) {
    double freq = std::pow(10000.0, -2.0 * i / cfg.dim);
    e(i) = std::sin(k * freq);
    e(half + i) = std::cos(k * freq);
  }
  return e;
}

MlpModel make_mlp(const std::vector<int>& sizes, Rng& rng) {
  require(sizes.size() >= 2, "mlp needs at least input and output sizes");
  for (int s : sizes) require(s >= 1, "mlp layer sizes must be >= 1");
  MlpModel m;
  m.sizes = sizes;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    double scale = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    m.W.push_back(uniform(rng, sizes[l], sizes[l + 1], -scale, scale));
    m.b.push_back(Mat::Zero(1, sizes[l + 1]));
    m.mW.push_back(Mat::Zero(sizes[l], sizes[l + 1]));
    m.vW.push_back(Mat::Zero(sizes[l], sizes[l + 1]));
    m.mb.push_back(Mat::Zero(1, sizes[l + 1]));
    m.vb.push_back(Mat::Zero(1, sizes[l + 1]));
  }
  return m;
}

Mat mlp_forward(const MlpModel& m, const Mat& X, Tape* tape) {
  require(X.cols() == m.in_dim(), "mlp_forward: input width mismatch");
  if (tape) {
    tape->inputs.clear();
    tape->pre.clear();
  }
  Mat h = X;
  for (int l = 0; l < m.n_layers(); ++l) {
    if (tape) tape->inputs.push_back(h);
    Mat z = (h * m.W[l]).rowwise() + m.b[l].row(0);
    if (tape) tape->pre.push_back(z);
    if (l + 1 < m.n_layers())
      h = z.unaryExpr([](double v) { return mish(v); });
    else
      h = std::move(z);
  }
  return h;
}

Mat mlp_backward(const MlpModel& m, const Tape& tape, const Mat& dY, Grads& g) {
  require(static_cast<int>(tape.inputs.size()) == m.n_layers(),
          "mlp_backward: tape does not match model");
  require(dY.cols() == m.out_dim(), "mlp_backward: output grad width mismatch");
  g.dW.assign(m.n_layers(), Mat());
  g.db.assign(m.n_layers(), Mat());
  Mat dz = dY;
  for (int l = m.n_layers() - 1; l >= 0; --l) {
    if (l != m.n_layers() - 1)
      dz.array() *= tape.pre[l].unaryExpr([](double v) { return mish_grad(v); }).array();
    g.dW[l] = tape.inputs[l].transpose() * dz;
    g.db[l] = dz.colwise().sum();
    if (l > 0) dz = dz * m.W[l].transpose();
  }
  return dz * m.W[0].transpose();
}

void adam_step(MlpModel& m, const Grads& g, double lr, double beta1,
               double beta2, double eps) {
  for (const Mat& d : g.dW)
    if (!all_finite(d)) throw NumericError("adam_step: non-finite gradient");
  for (const Mat& d : g.db)
    if (!all_finite(d)) throw NumericError("adam_step: non-finite gradient");
  m.adam_t += 1;
  double c1 = 1.0 - std::pow(beta1, static_cast<double>(m.adam_t));
  double c2 = 1.0 - std::pow(beta2, static_cast<double>(m.adam_t));
  auto update = [&](Mat& p, Mat& mm, Mat& vv, const Mat& d) {
    mm = beta1 * mm + (1.0 - beta1) * d;
    vv = beta2 * vv + (1.0 - beta2) * d.cwiseProduct(d);
    p.array() -= lr * (mm.array() / c1) / ((vv.array() / c2).sqrt() + eps);
  };
  for (int l = 0; l < m.n_layers(); ++l) {
    update(m.W[l], m.mW[l], m.vW[l], g.dW[l]);
    update(m.b[l], m.mb[l], m.vb[l], g.db[l]);
  }
}

double clip_grad_norm(Grads& g, double max_norm) {
  require(max_norm > 0, "clip_grad_norm: max_norm must be > 0");
  double sq = 0.0;
  for (const Mat& d : g.dW) sq += d.squaredNorm();
  for (const Mat& d : g.db) sq += d.squaredNorm();
  double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return 1.0;
  double scale = max_norm / norm;
  for (Mat& d : g.dW) d *= scale;
  for (Mat& d : g.db) d *= scale;
  return scale;
}

void soft_update(MlpModel& target, const MlpModel& online, double rho) {
  for (int l = 0; l < target.n_layers(); ++l) {
    target.W[l] = rho * target.W[l] + (1.0 - rho) * online.W[l];
    target.b[l] = rho * target.b[l] + (1.0 - rho) * online.b[l];
  }
}

void visit_mlp(MlpModel& m, const std::string& prefix,
               const std::function<void(const std::string&, Mat&)>& f) {
  for (int l = 0; l < m.n_layers(); ++l) {
    std::string base = prefix + "/L" + std::to_string(l);
    f(base + "/W", m.W[l]);
    f(base + "/b", m.b[l]);
    f(base + "/mW", m.mW[l]);
    f(base + "/vW", m.vW[l]);
    f(base + "/mb", m.mb[l]);
    f(base + "/vb", m.vb[l]);
  }
}

}  // namespace dipo
