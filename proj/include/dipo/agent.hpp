#pragma once
#include <functional>
#include <span>

#include "dipo/diffusion.hpp"
#include "dipo/envs.hpp"
#include "dipo/replay.hpp"

namespace dipo {

enum class PolicyKind { Diffusion, MlpBaseline };

struct DipoConfig {
  double gamma = 0.99;
  double rho = 0.005;  // soft update: p' <- rho p' + (1 - rho) p
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double action_lr = 0.03;  // eta
  int action_grad_steps = 20;
  int batch_size = 256;
  int K = 100;
  double grad_norm = 2.0;              // actor/critic gradient clip
  double action_grad_norm_ratio = 0.3; // per-action step <= ratio * box diameter
  int updates_per_round = 100;         // N (policy; critic unless overridden)
  int critic_updates_per_round = -1;   // -1: use updates_per_round
  long buffer_capacity = 1000000;
  int rollout_steps = 500;             // env steps per round
  int warmup_steps = 2000;             // uniform-random actions before policy
  int hidden = 256;                    // two hidden layers of this width
  int time_embed_dim = 32;
  int eval_episodes = 100;
  uint64_t seed = 0;

  int critic_updates() const {
    return critic_updates_per_round >= 0 ? critic_updates_per_round
                                         : updates_per_round;
  }
  void validate() const;
};

struct Critic {
  MlpModel q1, q2, q1_target, q2_target;
};

struct DipoAgent {
  PolicyKind kind = PolicyKind::Diffusion;
  DipoConfig cfg;
  EnvSpec env_spec;
  MlpModel policy;         // diffusion: eps_phi; baseline: mu_phi
  MlpModel policy_target;
  Critic critic;
  NoiseSchedule schedule;
  TimeEmbedConfig te;
  Rng rng;

  DipoAgent(const DipoConfig& cfg, const EnvSpec& spec, PolicyKind kind);

  // Draw actions for a batch of states from the given policy net, clamped to
  // the action box. explore adds exploration noise for the MLP baseline.
  Mat sample_actions(const MlpModel& net, const Mat& states, bool explore);
  Row act(const Row& s, bool explore);
};

// One double-Q critic step on a sampled batch; bootstrap from
// min(Q1', Q2') at next actions drawn from the current online policy,
// masked by done. Targets are not touched. Returns the mean residual loss.
double critic_update(DipoAgent& agent, ReplayBuffer& buf,
                     const std::vector<long>& idx);

struct ActionGradStats {
  long count = 0;
  double mean_step_norm = 0.0;
};

// Library form with an injectable value-gradient: qgrad(S, A) returns
// dQ/dA of min_i Q_i row-wise. Steps eta * grad, clips each row's step norm
// to max_step, clamps into [low, high], writes back in place.
ActionGradStats apply_action_gradient(
    ReplayBuffer& buf, std::span<const long> idx,
    const std::function<Mat(const Mat&, const Mat&)>& qgrad, double eta,
    double max_step, const Row& low, const Row& high);

// Agent form: gradient of min(Q1, Q2) through the online critics over the
// most recent rollout plus a sampled slice of batch_size * action_grad_steps.
ActionGradStats action_gradient_pass(DipoAgent& agent, ReplayBuffer& buf,
                                     std::span<const long> recent);

// n_updates DSM Adam steps (diffusion) or regression steps (baseline) on
// mini-batches from the buffer; returns the mean loss.
double policy_update(DipoAgent& agent, ReplayBuffer& buf, int n_updates);

// Regression policy |a - mu_phi(s)|^2; shared by policy_update for the
// baseline and tested standalone.
double mlp_baseline_update(MlpModel& policy, const DipoConfig& cfg,
                           ReplayBuffer& buf, int n_updates, Rng& rng);

// p' <- rho p' + (1 - rho) p for both critic targets and the policy target.
void soft_update_targets(DipoAgent& agent);

struct EvalStats {
  double ret_mean = 0.0, ret_std = 0.0;
  double reach_frac = 0.0;
  VectorXd per_goal;  // fraction of reaches per goal (empty if no goals)
};

// Deterministic evaluation rollouts with the target policy (explore = false)
// on a fresh Rng stream; does not disturb the agent's main stream.
EvalStats evaluate(DipoAgent& agent, Env& env, int episodes, uint64_t seed);

}  // namespace dipo
