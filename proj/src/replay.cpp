#include "dipo/replay.hpp"

namespace dipo {

ReplayBuffer::ReplayBuffer(long capacity, int state_dim, int action_dim)
    : capacity_(capacity),
      s_(capacity, state_dim),
      a_(capacity, action_dim),
      sn_(capacity, state_dim),
      r_(capacity),
      round_(capacity),
      done_(capacity, 0) {
  require(capacity >= 1, "replay buffer capacity must be >= 1");
}

void ReplayBuffer::push(const Transition& t, int round) {
  require(t.s.cols() == s_.cols() && t.a.cols() == a_.cols() &&
              t.s_next.cols() == sn_.cols(),
          "buffer_push: dimension mismatch");
  require(std::isfinite(t.r), "buffer_push: non-finite reward");
  s_.row(cursor_) = t.s;
  a_.row(cursor_) = t.a;
  sn_.row(cursor_) = t.s_next;
  r_(cursor_) = t.r;
  done_[cursor_] = t.done ? 1 : 0;
  round_(cursor_) = round;
  cursor_ = (cursor_ + 1) % capacity_;
  if (size_ < capacity_) size_ += 1;
}

std::vector<long> ReplayBuffer::sample_indices(long n, Rng& rng) const {
  require(size_ >= 1, "buffer_sample: empty buffer");
  std::vector<long> idx(n);
  for (long i = 0; i < n; ++i)
    idx[i] = static_cast<long>(rng.uniform_index(static_cast<uint64_t>(size_)));
  return idx;
}

Transition ReplayBuffer::get(long i) const {
  require(i >= 0 && i < size_, "buffer get: index out of range");
  return {s_.row(i), a_.row(i), sn_.row(i), r_(i), done_[i] != 0};
}

void ReplayBuffer::set_action(long i, const Row& a) {
  require(i >= 0 && i < size_, "set_action: index out of range");
  a_.row(i) = a;
}

void ReplayBuffer::restore_counters(long size, long cursor) {
  require(size >= 0 && size <= capacity_ && cursor >= 0 && cursor < capacity_,
          "replay restore: bad counters");
  size_ = size;
  cursor_ = cursor;
}

}  // namespace dipo
