#pragma once
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "dipo/agent.hpp"

namespace dipo {

struct EnvConfig {
  std::string name = "multigoal";  // multigoal | bandit
  MultiGoalConfig multigoal;
  std::vector<double> bandit_target = {0.5, -0.3};
  int bandit_state_dim = 1;
};

struct RunConfig {
  EnvConfig env;
  std::string policy = "diffusion";  // diffusion | mlp-baseline
  int rounds = 60;
  int eval_every = 10;
  std::string out_dir = ".";
  DipoConfig agent;

  PolicyKind policy_kind() const;
  void validate() const;
};

// Parse with Table-G defaults for missing keys; unknown keys and type
// mismatches are rejected with distinct messages.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& c);

std::unique_ptr<Env> make_env(const EnvConfig& c);

}  // namespace dipo
