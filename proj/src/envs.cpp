#include "dipo/envs.hpp"

#include <cmath>

namespace dipo {

MultiGoalEnv::MultiGoalEnv(const MultiGoalConfig& cfg) : cfg_(cfg) {
  spec_.state_dim = 2;
  spec_.action_dim = 2;
  spec_.action_low = Row::Constant(2, -1.0);
  spec_.action_high = Row::Constant(2, 1.0);
  spec_.max_episode_steps = cfg.max_episode_steps;
  goals_.resize(4, 2);
  goals_ << 0, 5, 0, -5, 5, 0, -5, 0;
  state_ = Row::Zero(2);
}

Row MultiGoalEnv::reset(Rng& rng) {
  state_ = cfg_.init_std * gaussian(rng, 1, 2);
  state_ = state_.cwiseMax(-3.0).cwiseMin(3.0);
  steps_ = 0;
  return state_;
}

StepResult MultiGoalEnv::step(const Row& a_in) {
  if (!a_in.allFinite()) throw NumericError("multigoal_step: NaN action");
  Row a = a_in.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
  Row next = (state_ + a).cwiseMax(-7.0).cwiseMin(7.0);
  double min_d2 = std::numeric_limits<double>::infinity();
  int nearest = -1;
  for (int g = 0; g < 4; ++g) {
    double d2 = (next - goals_.row(g)).squaredNorm();
    if (d2 < min_d2) {
      min_d2 = d2;
      nearest = g;
    }
  }
  bool reached = std::sqrt(min_d2) <= cfg_.reach_radius;
  StepResult res;
  res.s_next = next;
  res.r = cfg_.r1_coeff * (-a.squaredNorm()) - min_d2 + (reached ? 10.0 : 0.0);
  res.reached_goal = reached ? nearest : -1;
  steps_ += 1;
  res.terminal = reached;
  res.done = reached || steps_ >= cfg_.max_episode_steps;
  state_ = next;
  return res;
}

std::vector<double> MultiGoalEnv::save_state() const {
  return {state_(0), state_(1), static_cast<double>(steps_)};
}

void MultiGoalEnv::load_state(const std::vector<double>& s) {
  require(s.size() == 3, "multigoal: bad saved state");
  state_.resize(2);
  state_ << s[0], s[1];
  steps_ = static_cast<int>(s[2]);
}

QuadraticBandit::QuadraticBandit(const Row& a_star, int state_dim)
    : a_star_(a_star) {
  spec_.state_dim = state_dim;
  spec_.action_dim = static_cast<int>(a_star.cols());
  spec_.action_low = Row::Constant(spec_.action_dim, -1.0);
  spec_.action_high = Row::Constant(spec_.action_dim, 1.0);
  spec_.max_episode_steps = 1;
  require((a_star_.array() >= spec_.action_low.array()).all() &&
              (a_star_.array() <= spec_.action_high.array()).all(),
          "quadratic_bandit: a* must lie in the action box");
}

Row QuadraticBandit::reset(Rng&) { return Row::Zero(spec_.state_dim); }

StepResult QuadraticBandit::step(const Row& a) {
  if (!a.allFinite()) throw NumericError("quadratic_bandit: NaN action");
  StepResult res;
  res.s_next = Row::Zero(spec_.state_dim);
  res.r = -(a - a_star_).squaredNorm();
  res.done = true;
  res.terminal = true;
  return res;
}

}  // namespace dipo
