#pragma once
#include <functional>
#include <string>
#include <vector>

#include "dipo/rng.hpp"
#include "dipo/types.hpp"

namespace dipo {

// mish(x) = x * tanh(softplus(x)), softplus overflow-safe.
double mish(double x);
double mish_grad(double x);

struct TimeEmbedConfig {
  int dim = 32;  // even, >= 2
};

// Transformer frequency ladder, base 10000: first half sin, second half cos.
Row sinusoidal_embed(int k, const TimeEmbedConfig& cfg);

// Feed-forward net: hidden layers use Mish, output layer is affine.
// Adam moments live alongside the parameters.
struct MlpModel {
  std::vector<int> sizes;                // layer_sizes, e.g. {in, 256, 256, out}
  std::vector<Mat> W;                    // W[l]: sizes[l] x sizes[l+1]
  std::vector<Mat> b;                    // 1 x sizes[l+1]
  std::vector<Mat> mW, vW, mb, vb;       // Adam state, shapes mirror W/b
  long adam_t = 0;

  int in_dim() const { return sizes.front(); }
  int out_dim() const { return sizes.back(); }
  int n_layers() const { return static_cast<int>(W.size()); }
};

MlpModel make_mlp(const std::vector<int>& sizes, Rng& rng);

// Activation cache from a forward pass; inputs[l] feeds layer l,
// pre[l] is the pre-activation of layer l.
struct Tape {
  std::vector<Mat> inputs;
  std::vector<Mat> pre;
};

struct Grads {
  std::vector<Mat> dW;
  std::vector<Mat> db;
};

// X: batch x in_dim. Fills tape when given.
Mat mlp_forward(const MlpModel& m, const Mat& X, Tape* tape = nullptr);

// Exact reverse-mode gradients; returns the input gradient (batch x in_dim).
Mat mlp_backward(const MlpModel& m, const Tape& tape, const Mat& dY, Grads& g);

void adam_step(MlpModel& m, const Grads& g, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// Scales grads to global L2 norm <= max_norm; returns the scale applied.
double clip_grad_norm(Grads& g, double max_norm);

// target <- rho * target + (1 - rho) * online, elementwise over parameters.
void soft_update(MlpModel& target, const MlpModel& online, double rho);

// Named parameter/state visitation for checkpoints; order is stable.
void visit_mlp(MlpModel& m, const std::string& prefix,
               const std::function<void(const std::string&, Mat&)>& f);

}  // namespace dipo
