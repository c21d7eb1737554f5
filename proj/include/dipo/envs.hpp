#pragma once
#include <vector>

#include "dipo/rng.hpp"
#include "dipo/types.hpp"

namespace dipo {

struct EnvSpec {
  int state_dim = 0;
  int action_dim = 0;
  Row action_low, action_high;
  int max_episode_steps = 30;

  double action_diameter() const { return (action_high - action_low).norm(); }
};

struct StepResult {
  Row s_next;
  double r = 0.0;
  bool done = false;      // episode over (terminal state or step cap)
  bool terminal = false;  // true MDP termination; false at a pure step-cap cutoff,
                          // so learning can still bootstrap through the cutoff
  int reached_goal = -1;  // index into the goal set, -1 if none
};

class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual int n_goals() const { return 0; }
  virtual Row reset(Rng& rng) = 0;
  virtual StepResult step(const Row& a) = 0;
  // Mutable internal state for checkpoint/resume.
  virtual std::vector<double> save_state() const = 0;
  virtual void load_state(const std::vector<double>& s) = 0;
};

struct MultiGoalConfig {
  double r1_coeff = 0.1;
  double reach_radius = 0.5;
  int max_episode_steps = 30;
  double init_std = 0.5;  // reset ~ N(0, init_std^2 I), clamped to [-3, 3]^2
};

// 2D point mass on the [-7, 7]^2 plane, four symmetric goals at distance 5.
// Dynamics s' = clamp(s + a), a in [-1, 1]^2.
// Reward r1 + r2 + r3 = r1_coeff * (-|a|^2) - min_g |s' - g|^2 + 10 * reached.
class MultiGoalEnv : public Env {
 public:
  explicit MultiGoalEnv(const MultiGoalConfig& cfg = {});
  const EnvSpec& spec() const override { return spec_; }
  int n_goals() const override { return 4; }
  Row reset(Rng& rng) override;
  StepResult step(const Row& a) override;
  std::vector<double> save_state() const override;
  void load_state(const std::vector<double>& s) override;

  const Mat& goals() const { return goals_; }
  const MultiGoalConfig& config() const { return cfg_; }

 private:
  MultiGoalConfig cfg_;
  EnvSpec spec_;
  Mat goals_;  // 4 x 2
  Row state_;
  int steps_ = 0;
};

// One-step diagnostic with analytic Q(s, a) = r = -|a - a*|^2.
class QuadraticBandit : public Env {
 public:
  QuadraticBandit(const Row& a_star, int state_dim = 1);
  const EnvSpec& spec() const override { return spec_; }
  Row reset(Rng& rng) override;
  StepResult step(const Row& a) override;
  std::vector<double> save_state() const override { return {}; }
  void load_state(const std::vector<double>&) override {}

  const Row& target() const { return a_star_; }

 private:
  EnvSpec spec_;
  Row a_star_;
};

}  // namespace dipo
