#include "dipo/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace dipo {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'D', 'I', 'P', 'O'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
uint32_t get_u32(const char* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(p[i])) << (8 * i);
  return v;
}
uint64_t get_u64(const char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(p[i])) << (8 * i);
  return v;
}

}  // namespace

const Mat& Checkpoint::array(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return a.data;
  throw IoError("checkpoint: missing array " + name);
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  json meta;
  meta["version"] = kVersion;
  meta["config"] = ck.config;
  meta["rng"] = ck.rng_state;
  meta["round"] = ck.round;
  meta["env_steps"] = ck.env_steps;
  meta["env_needs_reset"] = ck.env_needs_reset;
  meta["ep_len"] = ck.ep_len;
  meta["buffer_size"] = ck.buffer_size;
  meta["buffer_cursor"] = ck.buffer_cursor;

  // Continuous train state rides in the float payload for bit fidelity.
  std::vector<NamedArray> extra;
  {
    Mat es(1, std::max<size_t>(ck.env_state.size(), 1));
    es.setZero();
    for (size_t i = 0; i < ck.env_state.size(); ++i) es(0, i) = ck.env_state[i];
    extra.push_back({"__train/env_state", es});
    meta["env_state_len"] = ck.env_state.size();
    Mat er(1, 1);
    er(0, 0) = ck.ep_return;
    extra.push_back({"__train/ep_return", er});
  }

  uint64_t offset = 0;
  json arrays = json::array();
  auto describe = [&](const NamedArray& a) {
    arrays.push_back({{"name", a.name},
                      {"rows", a.data.rows()},
                      {"cols", a.data.cols()},
                      {"offset", offset}});
    offset += static_cast<uint64_t>(a.data.size()) * 8;
  };
  for (const auto& a : ck.arrays) describe(a);
  for (const auto& a : extra) describe(a);
  meta["arrays"] = arrays;
  meta["payload_bytes"] = offset;

  std::string head;
  head.append(kMagic, 4);
  put_u32(head, kVersion);
  std::string meta_str = meta.dump();
  put_u64(head, meta_str.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
  auto write_payload = [&](const NamedArray& a) {
    std::string buf;
    buf.reserve(static_cast<size_t>(a.data.size()) * 8);
    const double* p = a.data.data();  // row-major storage
    for (Eigen::Index i = 0; i < a.data.size(); ++i)
      put_u64(buf, std::bit_cast<uint64_t>(p[i]));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  };
  for (const auto& a : ck.arrays) write_payload(a);
  for (const auto& a : extra) write_payload(a);
  if (!out) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path);
  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (blob.size() < 16) throw IoError("checkpoint truncated: " + path);
  if (std::memcmp(blob.data(), kMagic, 4) != 0)
    throw IoError("checkpoint has bad magic bytes: " + path);
  uint32_t version = get_u32(blob.data() + 4);
  if (version != kVersion)
    throw IoError("checkpoint version mismatch: " + std::to_string(version));
  uint64_t meta_len = get_u64(blob.data() + 8);
  if (blob.size() < 16 + meta_len) throw IoError("checkpoint truncated: " + path);
  json meta;
  try {
    meta = json::parse(blob.substr(16, meta_len));
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint metadata corrupt: ") + e.what());
  }

  Checkpoint ck;
  ck.version = version;
  ck.config = meta.at("config");
  auto rng = meta.at("rng").get<std::vector<uint64_t>>();
  if (rng.size() != 4) throw IoError("checkpoint rng state corrupt");
  std::copy(rng.begin(), rng.end(), ck.rng_state.begin());
  ck.round = meta.at("round").get<int>();
  ck.env_steps = meta.at("env_steps").get<long>();
  ck.env_needs_reset = meta.at("env_needs_reset").get<bool>();
  ck.ep_len = meta.at("ep_len").get<int>();
  ck.buffer_size = meta.at("buffer_size").get<long>();
  ck.buffer_cursor = meta.at("buffer_cursor").get<long>();

  uint64_t payload_bytes = meta.at("payload_bytes").get<uint64_t>();
  size_t payload_start = 16 + meta_len;
  if (blob.size() != payload_start + payload_bytes)
    throw IoError("checkpoint truncated or oversized payload: " + path);

  size_t env_state_len = meta.at("env_state_len").get<size_t>();
  for (const auto& desc : meta.at("arrays")) {
    NamedArray a;
    a.name = desc.at("name").get<std::string>();
    long rows = desc.at("rows").get<long>();
    long cols = desc.at("cols").get<long>();
    uint64_t off = desc.at("offset").get<uint64_t>();
    uint64_t bytes = static_cast<uint64_t>(rows) * cols * 8;
    if (off + bytes > payload_bytes)
      throw IoError("checkpoint array out of bounds: " + a.name);
    a.data.resize(rows, cols);
    const char* p = blob.data() + payload_start + off;
    for (Eigen::Index i = 0; i < a.data.size(); ++i)
      a.data.data()[i] = std::bit_cast<double>(get_u64(p + i * 8));
    if (a.name == "__train/env_state") {
      ck.env_state.assign(a.data.data(), a.data.data() + env_state_len);
    } else if (a.name == "__train/ep_return") {
      ck.ep_return = a.data(0, 0);
    } else {
      ck.arrays.push_back(std::move(a));
    }
  }
  return ck;
}

namespace {

void collect_agent_arrays(DipoAgent& agent, std::vector<NamedArray>& out) {
  auto add = [&out](const std::string& name, Mat& m) {
    out.push_back({name, m});
  };
  visit_mlp(agent.policy, "policy", add);
  visit_mlp(agent.policy_target, "policy_target", add);
  visit_mlp(agent.critic.q1, "q1", add);
  visit_mlp(agent.critic.q2, "q2", add);
  visit_mlp(agent.critic.q1_target, "q1_target", add);
  visit_mlp(agent.critic.q2_target, "q2_target", add);
  Mat t(1, 3);
  t << static_cast<double>(agent.policy.adam_t),
      static_cast<double>(agent.critic.q1.adam_t),
      static_cast<double>(agent.critic.q2.adam_t);
  out.push_back({"adam_t", t});
}

void restore_agent_arrays(const Checkpoint& ck, DipoAgent& agent) {
  auto set = [&ck](const std::string& name, Mat& m) {
    const Mat& src = ck.array(name);
    if (src.rows() != m.rows() || src.cols() != m.cols())
      throw IoError("checkpoint shape mismatch for " + name);
    m = src;
  };
  visit_mlp(agent.policy, "policy", set);
  visit_mlp(agent.policy_target, "policy_target", set);
  visit_mlp(agent.critic.q1, "q1", set);
  visit_mlp(agent.critic.q2, "q2", set);
  visit_mlp(agent.critic.q1_target, "q1_target", set);
  visit_mlp(agent.critic.q2_target, "q2_target", set);
  const Mat& t = ck.array("adam_t");
  agent.policy.adam_t = static_cast<long>(t(0, 0));
  agent.policy_target.adam_t = agent.policy.adam_t;
  agent.critic.q1.adam_t = static_cast<long>(t(0, 1));
  agent.critic.q2.adam_t = static_cast<long>(t(0, 2));
  agent.critic.q1_target.adam_t = agent.critic.q1.adam_t;
  agent.critic.q2_target.adam_t = agent.critic.q2.adam_t;
}

}  // namespace

Checkpoint make_checkpoint(const RunConfig& cfg, DipoAgent& agent,
                           ReplayBuffer& buf, const TrainState& st, Env& env) {
  Checkpoint ck;
  ck.config = config_to_json(cfg);
  ck.rng_state = agent.rng.save_state();
  ck.round = st.round;
  ck.env_steps = st.env_steps;
  ck.env_needs_reset = st.env_needs_reset;
  ck.ep_return = st.ep_return;
  ck.ep_len = st.ep_len;
  ck.buffer_size = buf.size();
  ck.buffer_cursor = buf.cursor();
  ck.env_state = env.save_state();
  if (!st.env_needs_reset) {
    Mat obs(1, st.env_obs.cols());
    obs.row(0) = st.env_obs;
    ck.arrays.push_back({"train/env_obs", obs});
  }
  collect_agent_arrays(agent, ck.arrays);
  long n = buf.size();
  ck.arrays.push_back({"buffer/s", buf.raw_states().topRows(n)});
  ck.arrays.push_back({"buffer/a", buf.raw_actions().topRows(n)});
  ck.arrays.push_back({"buffer/s_next", buf.raw_next_states().topRows(n)});
  Mat r(n, 1), d(n, 1), tag(n, 1);
  for (long i = 0; i < n; ++i) {
    r(i, 0) = buf.raw_rewards()(i);
    d(i, 0) = buf.raw_dones()[i] ? 1.0 : 0.0;
    tag(i, 0) = buf.raw_round_tags()(i);
  }
  ck.arrays.push_back({"buffer/r", r});
  ck.arrays.push_back({"buffer/done", d});
  ck.arrays.push_back({"buffer/round_tag", tag});
  return ck;
}

void restore_checkpoint(const Checkpoint& ck, DipoAgent& agent,
                        ReplayBuffer& buf, TrainState& st, Env& env) {
  restore_agent_arrays(ck, agent);
  agent.rng.load_state(ck.rng_state);
  st.round = ck.round;
  st.env_steps = ck.env_steps;
  st.env_needs_reset = ck.env_needs_reset;
  st.ep_return = ck.ep_return;
  st.ep_len = ck.ep_len;
  if (!st.env_needs_reset) st.env_obs = ck.array("train/env_obs").row(0);
  env.load_state(ck.env_state);
  long n = ck.buffer_size;
  require(n <= buf.capacity(), "checkpoint buffer larger than capacity");
  buf.raw_states().topRows(n) = ck.array("buffer/s");
  buf.raw_actions().topRows(n) = ck.array("buffer/a");
  buf.raw_next_states().topRows(n) = ck.array("buffer/s_next");
  const Mat& r = ck.array("buffer/r");
  const Mat& d = ck.array("buffer/done");
  const Mat& tag = ck.array("buffer/round_tag");
  for (long i = 0; i < n; ++i) {
    buf.raw_rewards()(i) = r(i, 0);
    buf.raw_dones()[i] = d(i, 0) != 0.0;
    buf.raw_round_tags()(i) = tag(i, 0);
  }
  buf.restore_counters(ck.buffer_size, ck.buffer_cursor);
}

}  // namespace dipo
