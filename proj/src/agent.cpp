#include "dipo/agent.hpp"

#include <cmath>

namespace dipo {

void DipoConfig::validate() const {
  require(gamma > 0 && gamma < 1, "gamma must be in (0,1)");
  require(rho > 0 && rho <= 1, "rho must be in (0,1]");
  require(actor_lr > 0 && critic_lr > 0 && action_lr > 0,
          "learning rates must be > 0");
  require(K >= 2, "K must be >= 2");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(buffer_capacity >= 1, "buffer_capacity must be >= 1");
  require(grad_norm > 0, "grad_norm must be > 0");
  require(action_grad_norm_ratio > 0, "action_grad_norm_ratio must be > 0");
  require(hidden >= 1, "hidden width must be >= 1");
  require(time_embed_dim >= 2 && time_embed_dim % 2 == 0,
          "time_embed_dim must be even, >= 2");
}

DipoAgent::DipoAgent(const DipoConfig& c, const EnvSpec& spec, PolicyKind k)
    : kind(k), cfg(c), env_spec(spec), rng(c.seed) {
  cfg.validate();
  te.dim = cfg.time_embed_dim;
  schedule = cosine_schedule(cfg.K);
  int s = spec.state_dim, a = spec.action_dim, h = cfg.hidden;
  if (kind == PolicyKind::Diffusion)
    policy = make_mlp({a + s + te.dim, h, h, a}, rng);
  else
    policy = make_mlp({s, h, h, a}, rng);
  policy_target = policy;
  critic.q1 = make_mlp({s + a, h, h, 1}, rng);
  critic.q2 = make_mlp({s + a, h, h, 1}, rng);
  critic.q1_target = critic.q1;
  critic.q2_target = critic.q2;
}

Mat DipoAgent::sample_actions(const MlpModel& net, const Mat& states,
                              bool explore) {
  Mat a;
  if (kind == PolicyKind::Diffusion) {
    a = ddpm_sample(net, schedule, te, states, env_spec.action_dim, rng);
  } else {
    a = mlp_forward(net, states);
    if (explore) a += 0.1 * gaussian(rng, a.rows(), a.cols());
  }
  return a.cwiseMax(env_spec.action_low.replicate(a.rows(), 1))
      .cwiseMin(env_spec.action_high.replicate(a.rows(), 1));
}

Row DipoAgent::act(const Row& s, bool explore) {
  const MlpModel& net = explore ? policy : policy_target;
  return sample_actions(net, Mat(s), explore).row(0);
}

double critic_update(DipoAgent& agent, ReplayBuffer& buf,
                     const std::vector<long>& idx) {
  require(!idx.empty(), "critic_update: empty batch");
  const long n = static_cast<long>(idx.size());
  const int sd = agent.env_spec.state_dim, ad = agent.env_spec.action_dim;
  Mat S(n, sd), A(n, ad), Sn(n, sd);
  VectorXd r(n), mask(n);
  for (long i = 0; i < n; ++i) {
    S.row(i) = buf.states().row(idx[i]);
    A.row(i) = buf.actions().row(idx[i]);
    Sn.row(i) = buf.next_states().row(idx[i]);
    r(i) = buf.rewards()(idx[i]);
    mask(i) = buf.dones()[idx[i]] ? 0.0 : 1.0;
  }
  Mat An = agent.sample_actions(agent.policy, Sn, false);
  Mat XAn(n, sd + ad);
  XAn << Sn, An;
  Mat q1n = mlp_forward(agent.critic.q1_target, XAn);
  Mat q2n = mlp_forward(agent.critic.q2_target, XAn);
  VectorXd target = r + agent.cfg.gamma *
                            mask.cwiseProduct(q1n.col(0).cwiseMin(q2n.col(0)));
  Mat X(n, sd + ad);
  X << S, A;
  double loss = 0.0;
  for (MlpModel* q : {&agent.critic.q1, &agent.critic.q2}) {
    Tape tape;
    Mat out = mlp_forward(*q, X, &tape);
    Mat resid = out.col(0) - target;
    loss += resid.squaredNorm() / static_cast<double>(n);
    Grads g;
    mlp_backward(*q, tape, (2.0 / static_cast<double>(n)) * resid, g);
    clip_grad_norm(g, agent.cfg.grad_norm);
    adam_step(*q, g, agent.cfg.critic_lr);
  }
  loss *= 0.5;
  if (!std::isfinite(loss)) throw NumericError("critic_update: non-finite loss");
  return loss;
}

ActionGradStats apply_action_gradient(
    ReplayBuffer& buf, std::span<const long> idx,
    const std::function<Mat(const Mat&, const Mat&)>& qgrad, double eta,
    double max_step, const Row& low, const Row& high) {
  ActionGradStats stats;
  if (idx.empty()) return stats;
  const long n = static_cast<long>(idx.size());
  Mat S(n, buf.states().cols()), A(n, buf.actions().cols());
  for (long i = 0; i < n; ++i) {
    S.row(i) = buf.states().row(idx[i]);
    A.row(i) = buf.actions().row(idx[i]);
  }
  Mat g = qgrad(S, A);
  double norm_sum = 0.0;
  for (long i = 0; i < n; ++i) {
    Row step = eta * g.row(i);
    double norm = step.norm();
    if (norm > max_step) step *= max_step / norm;
    Row a_new = (A.row(i) + step).cwiseMax(low).cwiseMin(high);
    norm_sum += (a_new - A.row(i)).norm();
    buf.set_action(idx[i], a_new);
  }
  stats.count = n;
  stats.mean_step_norm = norm_sum / static_cast<double>(n);
  return stats;
}

namespace {
// Row-wise gradient of min(Q1, Q2) with respect to the action input.
Mat min_critic_action_grad(DipoAgent& agent, const Mat& S, const Mat& A) {
  const long n = S.rows();
  const int sd = static_cast<int>(S.cols()), ad = static_cast<int>(A.cols());
  Mat X(n, sd + ad);
  X << S, A;
  Tape t1, t2;
  Mat q1 = mlp_forward(agent.critic.q1, X, &t1);
  Mat q2 = mlp_forward(agent.critic.q2, X, &t2);
  Mat d1 = Mat::Zero(n, 1), d2 = Mat::Zero(n, 1);
  for (long i = 0; i < n; ++i)
    (q1(i, 0) <= q2(i, 0) ? d1 : d2)(i, 0) = 1.0;
  Grads g1, g2;
  Mat in1 = mlp_backward(agent.critic.q1, t1, d1, g1);
  Mat in2 = mlp_backward(agent.critic.q2, t2, d2, g2);
  return in1.rightCols(ad) + in2.rightCols(ad);
}
}  // namespace

ActionGradStats action_gradient_pass(DipoAgent& agent, ReplayBuffer& buf,
                                     std::span<const long> recent) {
  if (buf.size() == 0) return {};
  std::vector<long> idx(recent.begin(), recent.end());
  long slice = static_cast<long>(agent.cfg.batch_size) *
               static_cast<long>(agent.cfg.action_grad_steps);
  auto sampled = buf.sample_indices(slice, agent.rng);
  idx.insert(idx.end(), sampled.begin(), sampled.end());

  double max_step =
      agent.cfg.action_grad_norm_ratio * agent.env_spec.action_diameter();
  auto qgrad = [&agent](const Mat& S, const Mat& A) {
    return min_critic_action_grad(agent, S, A);
  };
  // Chunked so the temporaries stay cache-sized.
  const long chunk = 2048;
  ActionGradStats total;
  double norm_weighted = 0.0;
  for (size_t off = 0; off < idx.size(); off += chunk) {
    size_t len = std::min<size_t>(chunk, idx.size() - off);
    auto st = apply_action_gradient(
        buf, std::span<const long>(idx.data() + off, len), qgrad,
        agent.cfg.action_lr, max_step, agent.env_spec.action_low,
        agent.env_spec.action_high);
    total.count += st.count;
    norm_weighted += st.mean_step_norm * static_cast<double>(st.count);
  }
  if (total.count > 0)
    total.mean_step_norm = norm_weighted / static_cast<double>(total.count);
  return total;
}

double policy_update(DipoAgent& agent, ReplayBuffer& buf, int n_updates) {
  if (n_updates <= 0) return 0.0;
  require(buf.size() >= 1, "policy_update: empty buffer");
  if (agent.kind == PolicyKind::MlpBaseline)
    return mlp_baseline_update(agent.policy, agent.cfg, buf, n_updates,
                               agent.rng);
  const int ad = agent.env_spec.action_dim, sd = agent.env_spec.state_dim;
  double loss_sum = 0.0;
  for (int u = 0; u < n_updates; ++u) {
    auto idx = buf.sample_indices(agent.cfg.batch_size, agent.rng);
    const long n = static_cast<long>(idx.size());
    Mat S(n, sd), A(n, ad);
    std::vector<int> ks(n);
    for (long i = 0; i < n; ++i) {
      S.row(i) = buf.states().row(idx[i]);
      A.row(i) = buf.actions().row(idx[i]);
      ks[i] = 1 + static_cast<int>(agent.rng.uniform_index(agent.cfg.K));
    }
    Mat Z = gaussian(agent.rng, n, ad);
    Grads g;
    loss_sum += dsm_loss_and_grads(agent.policy, agent.schedule, agent.te, S, A,
                                   ks, Z, g);
    clip_grad_norm(g, agent.cfg.grad_norm);
    adam_step(agent.policy, g, agent.cfg.actor_lr);
  }
  return loss_sum / n_updates;
}

double mlp_baseline_update(MlpModel& policy, const DipoConfig& cfg,
                           ReplayBuffer& buf, int n_updates, Rng& rng) {
  if (n_updates <= 0) return 0.0;
  require(buf.size() >= 1, "mlp_baseline_update: empty buffer");
  double loss_sum = 0.0;
  for (int u = 0; u < n_updates; ++u) {
    auto idx = buf.sample_indices(cfg.batch_size, rng);
    const long n = static_cast<long>(idx.size());
    Mat S(n, buf.states().cols()), A(n, buf.actions().cols());
    for (long i = 0; i < n; ++i) {
      S.row(i) = buf.states().row(idx[i]);
      A.row(i) = buf.actions().row(idx[i]);
    }
    Tape tape;
    Mat out = mlp_forward(policy, S, &tape);
    Mat resid = out - A;
    loss_sum += resid.squaredNorm() / static_cast<double>(n);
    Grads g;
    mlp_backward(policy, tape, (2.0 / static_cast<double>(n)) * resid, g);
    clip_grad_norm(g, cfg.grad_norm);
    adam_step(policy, g, cfg.actor_lr);
  }
  return loss_sum / n_updates;
}

void soft_update_targets(DipoAgent& agent) {
  soft_update(agent.policy_target, agent.policy, agent.cfg.rho);
  soft_update(agent.critic.q1_target, agent.critic.q1, agent.cfg.rho);
  soft_update(agent.critic.q2_target, agent.critic.q2, agent.cfg.rho);
}

EvalStats evaluate(DipoAgent& agent, Env& env, int episodes, uint64_t seed) {
  EvalStats stats;
  if (episodes <= 0) return stats;
  Rng eval_rng(seed, 0x9e3779b97f4a7c15ULL);
  Rng saved = agent.rng;
  agent.rng = eval_rng;
  std::vector<double> returns;
  returns.reserve(episodes);
  int goals = env.n_goals();
  VectorXd reaches = VectorXd::Zero(std::max(goals, 1));
  long reached_total = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    Row s = env.reset(agent.rng);
    double ret = 0.0;
    for (;;) {
      Row a = agent.act(s, false);
      StepResult res = env.step(a);
      ret += res.r;
      if (res.done) {
        if (res.reached_goal >= 0) {
          reached_total += 1;
          reaches(res.reached_goal) += 1.0;
        }
        break;
      }
      s = res.s_next;
    }
    returns.push_back(ret);
  }
  agent.rng = saved;
  double mean = 0.0;
  for (double v : returns) mean += v;
  mean /= returns.size();
  double var = 0.0;
  for (double v : returns) var += (v - mean) * (v - mean);
  stats.ret_mean = mean;
  stats.ret_std = std::sqrt(var / returns.size());
  stats.reach_frac = static_cast<double>(reached_total) / episodes;
  if (goals > 0) {
    stats.per_goal = reached_total > 0
                         ? VectorXd(reaches / static_cast<double>(reached_total))
                         : VectorXd(VectorXd::Zero(goals));
  }
  return stats;
}

}  // namespace dipo
