#pragma once
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dipo/config.hpp"
#include "dipo/train.hpp"

namespace dipo {

struct NamedArray {
  std::string name;
  Mat data;
};

// On-disk layout: magic "DIPO", LE u32 version, LE u64 JSON length, JSON
// metadata (config, rng state, counters, array names/shapes/offsets), then
// the concatenated LE f64 arrays in row-major order.
struct Checkpoint {
  uint32_t version = 1;
  nlohmann::json config;
  std::array<uint64_t, 4> rng_state{};
  int round = 0;
  long env_steps = 0;
  bool env_needs_reset = true;
  double ep_return = 0.0;
  int ep_len = 0;
  long buffer_size = 0;
  long buffer_cursor = 0;
  std::vector<double> env_state;
  std::vector<NamedArray> arrays;

  const Mat& array(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const RunConfig& cfg, DipoAgent& agent,
                           ReplayBuffer& buf, const TrainState& st, Env& env);
void restore_checkpoint(const Checkpoint& ck, DipoAgent& agent,
                        ReplayBuffer& buf, TrainState& st, Env& env);

}  // namespace dipo
