#include "dipo/train.hpp"

#include <cmath>

namespace dipo {

std::vector<RoundMetrics> train(
    DipoAgent& agent, Env& env, ReplayBuffer& buf, TrainState& st, int rounds,
    const std::function<void(const RoundMetrics&)>& on_round) {
  std::vector<RoundMetrics> out;
  const EnvSpec& spec = env.spec();
  for (int r = 0; r < rounds; ++r) {
    st.round += 1;
    RoundMetrics m;
    m.round = st.round;
    std::vector<double> ep_returns;
    int goals = env.n_goals();
    VectorXd goal_counts = VectorXd::Zero(std::max(goals, 1));
    long finished = 0, reached = 0;
    std::vector<long> fresh;
    fresh.reserve(agent.cfg.rollout_steps);

    for (int t = 0; t < agent.cfg.rollout_steps; ++t) {
      if (st.env_needs_reset) {
        st.env_obs = env.reset(agent.rng);
        st.ep_return = 0.0;
        st.ep_len = 0;
        st.env_needs_reset = false;
      }
      Row a;
      if (st.env_steps < agent.cfg.warmup_steps)
        a = uniform(agent.rng, 1, spec.action_dim, 0.0, 1.0)
                .cwiseProduct(spec.action_high - spec.action_low) +
            spec.action_low;
      else
        a = agent.act(st.env_obs, true);
      StepResult res = env.step(a);
      fresh.push_back(buf.cursor());
      buf.push({st.env_obs, a, res.s_next, res.r, res.terminal}, st.round);
      st.env_steps += 1;
      st.ep_return += res.r;
      st.ep_len += 1;
      if (res.done) {
        ep_returns.push_back(st.ep_return);
        finished += 1;
        if (res.reached_goal >= 0) {
          reached += 1;
          goal_counts(res.reached_goal) += 1.0;
        }
        st.env_needs_reset = true;
      } else {
        st.env_obs = res.s_next;
      }
    }

    bool learning = st.env_steps >= agent.cfg.warmup_steps;
    double critic_loss = 0.0;
    int nc = learning ? agent.cfg.critic_updates() : 0;
    for (int u = 0; u < nc; ++u)
      critic_loss +=
          critic_update(agent, buf, buf.sample_indices(agent.cfg.batch_size,
                                                       agent.rng));
    m.critic_loss = nc > 0 ? critic_loss / nc : 0.0;

    if (learning) {
      auto st_grad = action_gradient_pass(agent, buf, fresh);
      m.action_grad_norm = st_grad.mean_step_norm;
      m.dsm_loss = policy_update(agent, buf, agent.cfg.updates_per_round);
      soft_update_targets(agent);
    }

    m.env_steps = st.env_steps;
    if (!ep_returns.empty()) {
      double mean = 0.0;
      for (double v : ep_returns) mean += v;
      mean /= ep_returns.size();
      double var = 0.0;
      for (double v : ep_returns) var += (v - mean) * (v - mean);
      m.episode_return_mean = mean;
      m.episode_return_std = std::sqrt(var / ep_returns.size());
    }
    m.goals_reached_frac =
        finished > 0 ? static_cast<double>(reached) / finished : 0.0;
    if (goals > 0)
      m.per_goal_fractions =
          finished > 0 ? VectorXd(goal_counts / static_cast<double>(finished))
                       : VectorXd(VectorXd::Zero(goals));
    if (on_round) on_round(m);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace dipo
