#include "dipo/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace dipo {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& scope) {
  for (auto& [key, _] : j.items())
    if (!known.count(key))
      throw ValidationError("unknown config key: " + scope + key);
}

template <class T>
void take(const json& j, const char* key, T& out, const std::string& scope) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config type mismatch at: " + scope + key);
  }
}

}  // namespace

PolicyKind RunConfig::policy_kind() const {
  if (policy == "diffusion") return PolicyKind::Diffusion;
  if (policy == "mlp-baseline") return PolicyKind::MlpBaseline;
  throw ValidationError("policy must be 'diffusion' or 'mlp-baseline'");
}

void RunConfig::validate() const {
  policy_kind();
  agent.validate();
  if (env.name != "multigoal" && env.name != "bandit")
    throw ValidationError("env.name must be 'multigoal' or 'bandit'");
  require(rounds >= 0, "rounds must be >= 0");
  require(eval_every >= 1, "eval_every must be >= 1");
  require(env.multigoal.reach_radius > 0, "reach_radius must be > 0");
  require(env.multigoal.max_episode_steps >= 1, "max_episode_steps must be >= 1");
  require(env.bandit_state_dim >= 1, "bandit_state_dim must be >= 1");
  require(!env.bandit_target.empty(), "bandit_target must be non-empty");
}

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ValidationError("config root must be a JSON object");
  RunConfig c;
  reject_unknown(j, {"env", "policy", "rounds", "eval_every", "out_dir",
                     "agent", "seed"},
                 "");
  take(j, "policy", c.policy, "");
  take(j, "rounds", c.rounds, "");
  take(j, "eval_every", c.eval_every, "");
  take(j, "out_dir", c.out_dir, "");
  take(j, "seed", c.agent.seed, "");
  if (j.contains("env")) {
    const json& e = j.at("env");
    if (!e.is_object()) throw ValidationError("config type mismatch at: env");
    reject_unknown(e,
                   {"name", "r1_coeff", "reach_radius", "max_episode_steps",
                    "init_std", "bandit_target", "bandit_state_dim"},
                   "env.");
    take(e, "name", c.env.name, "env.");
    take(e, "r1_coeff", c.env.multigoal.r1_coeff, "env.");
    take(e, "reach_radius", c.env.multigoal.reach_radius, "env.");
    take(e, "max_episode_steps", c.env.multigoal.max_episode_steps, "env.");
    take(e, "init_std", c.env.multigoal.init_std, "env.");
    take(e, "bandit_target", c.env.bandit_target, "env.");
    take(e, "bandit_state_dim", c.env.bandit_state_dim, "env.");
  }
  if (j.contains("agent")) {
    const json& a = j.at("agent");
    if (!a.is_object()) throw ValidationError("config type mismatch at: agent");
    reject_unknown(
        a, {"gamma", "rho", "actor_lr", "critic_lr", "action_lr",
            "action_grad_steps", "batch_size", "K", "grad_norm",
            "action_grad_norm_ratio", "updates_per_round",
            "critic_updates_per_round", "buffer_capacity", "rollout_steps",
            "warmup_steps", "hidden", "time_embed_dim", "eval_episodes"},
        "agent.");
    DipoConfig& d = c.agent;
    take(a, "gamma", d.gamma, "agent.");
    take(a, "rho", d.rho, "agent.");
    take(a, "actor_lr", d.actor_lr, "agent.");
    take(a, "critic_lr", d.critic_lr, "agent.");
    take(a, "action_lr", d.action_lr, "agent.");
    take(a, "action_grad_steps", d.action_grad_steps, "agent.");
    take(a, "batch_size", d.batch_size, "agent.");
    take(a, "K", d.K, "agent.");
    take(a, "grad_norm", d.grad_norm, "agent.");
    take(a, "action_grad_norm_ratio", d.action_grad_norm_ratio, "agent.");
    take(a, "updates_per_round", d.updates_per_round, "agent.");
    take(a, "critic_updates_per_round", d.critic_updates_per_round, "agent.");
    take(a, "buffer_capacity", d.buffer_capacity, "agent.");
    take(a, "rollout_steps", d.rollout_steps, "agent.");
    take(a, "warmup_steps", d.warmup_steps, "agent.");
    take(a, "hidden", d.hidden, "agent.");
    take(a, "time_embed_dim", d.time_embed_dim, "agent.");
    take(a, "eval_episodes", d.eval_episodes, "agent.");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

json config_to_json(const RunConfig& c) {
  const DipoConfig& d = c.agent;
  return json{
      {"env",
       {{"name", c.env.name},
        {"r1_coeff", c.env.multigoal.r1_coeff},
        {"reach_radius", c.env.multigoal.reach_radius},
        {"max_episode_steps", c.env.multigoal.max_episode_steps},
        {"init_std", c.env.multigoal.init_std},
        {"bandit_target", c.env.bandit_target},
        {"bandit_state_dim", c.env.bandit_state_dim}}},
      {"policy", c.policy},
      {"rounds", c.rounds},
      {"eval_every", c.eval_every},
      {"out_dir", c.out_dir},
      {"seed", d.seed},
      {"agent",
       {{"gamma", d.gamma},
        {"rho", d.rho},
        {"actor_lr", d.actor_lr},
        {"critic_lr", d.critic_lr},
        {"action_lr", d.action_lr},
        {"action_grad_steps", d.action_grad_steps},
        {"batch_size", d.batch_size},
        {"K", d.K},
        {"grad_norm", d.grad_norm},
        {"action_grad_norm_ratio", d.action_grad_norm_ratio},
        {"updates_per_round", d.updates_per_round},
        {"critic_updates_per_round", d.critic_updates_per_round},
        {"buffer_capacity", d.buffer_capacity},
        {"rollout_steps", d.rollout_steps},
        {"warmup_steps", d.warmup_steps},
        {"hidden", d.hidden},
        {"time_embed_dim", d.time_embed_dim},
        {"eval_episodes", d.eval_episodes}}}};
}

std::unique_ptr<Env> make_env(const EnvConfig& c) {
  if (c.name == "multigoal") return std::make_unique<MultiGoalEnv>(c.multigoal);
  Row target(static_cast<Eigen::Index>(c.bandit_target.size()));
  for (size_t i = 0; i < c.bandit_target.size(); ++i)
    target(static_cast<Eigen::Index>(i)) = c.bandit_target[i];
  return std::make_unique<QuadraticBandit>(target, c.bandit_state_dim);
}

}  // namespace dipo
