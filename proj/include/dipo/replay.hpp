#pragma once
#include <vector>

#include "dipo/rng.hpp"
#include "dipo/types.hpp"

namespace dipo {

struct Transition {
  Row s, a, s_next;
  double r = 0.0;
  bool done = false;
};

// Ring buffer with column-stored fields; stored actions are mutable in place
// (the action-gradient pass rewrites them). round_tag records the training
// round each transition was collected in (used for the state scatter plot).
class ReplayBuffer {
 public:
  ReplayBuffer(long capacity, int state_dim, int action_dim);

  void push(const Transition& t, int round = 0);
  long size() const { return size_; }
  long capacity() const { return capacity_; }
  long cursor() const { return cursor_; }

  // n i.i.d. uniform indices with replacement; throws on empty buffer.
  std::vector<long> sample_indices(long n, Rng& rng) const;

  Transition get(long i) const;

  // Field access for batched updates; rows 0..size-1 are valid.
  const Mat& states() const { return s_; }
  const Mat& actions() const { return a_; }
  const Mat& next_states() const { return sn_; }
  const VectorXd& rewards() const { return r_; }
  const std::vector<uint8_t>& dones() const { return done_; }
  const VectorXd& round_tags() const { return round_; }

  // In-place action rewrite (action-gradient pass).
  void set_action(long i, const Row& a);

  // Checkpoint plumbing: raw mutable access plus cursor/size restore.
  Mat& raw_states() { return s_; }
  Mat& raw_actions() { return a_; }
  Mat& raw_next_states() { return sn_; }
  VectorXd& raw_rewards() { return r_; }
  std::vector<uint8_t>& raw_dones() { return done_; }
  VectorXd& raw_round_tags() { return round_; }
  void restore_counters(long size, long cursor);

 private:
  long capacity_, size_ = 0, cursor_ = 0;
  Mat s_, a_, sn_;
  VectorXd r_, round_;
  std::vector<uint8_t> done_;
};

}  // namespace dipo
