#pragma once
#include <functional>

#include "dipo/agent.hpp"

namespace dipo {

struct RoundMetrics {
  int round = 0;
  long env_steps = 0;
  double episode_return_mean = 0.0;
  double episode_return_std = 0.0;
  double critic_loss = 0.0;
  double dsm_loss = 0.0;
  double action_grad_norm = 0.0;
  double goals_reached_frac = 0.0;
  VectorXd per_goal_fractions;  // of episodes finished this round
};

// Mutable loop state, checkpointable at round boundaries. Episodes may span
// rounds, so the mid-episode accumulators live here too.
struct TrainState {
  int round = 0;
  long env_steps = 0;
  bool env_needs_reset = true;
  Row env_obs;
  double ep_return = 0.0;
  int ep_len = 0;
};

// One DIPO round: rollout, critic updates, action-gradient pass over the
// fresh rollout plus a buffer slice, policy updates, soft target update.
// Fully deterministic given the agent's Rng state.
std::vector<RoundMetrics> train(
    DipoAgent& agent, Env& env, ReplayBuffer& buf, TrainState& st, int rounds,
    const std::function<void(const RoundMetrics&)>& on_round = nullptr);

}  // namespace dipo
