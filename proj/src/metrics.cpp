#include "dipo/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dipo {

namespace {
const char* kHeader =
    "round,env_steps,episode_return_mean,episode_return_std,critic_loss,"
    "dsm_loss,action_grad_norm,goals_reached_frac,per_goal_fractions";

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw IoError("metrics: bad numeric field '" + s + "'");
  return v;
}
}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

MetricsWriter::MetricsWriter(const std::string& path, bool append)
    : path_(path) {
  if (!append) {
    std::ofstream out(path_, std::ios::trunc);
    if (!out) throw IoError("cannot write metrics file: " + path_);
    out << kHeader << "\n";
  }
}

void MetricsWriter::write(const RoundMetrics& m) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to metrics file: " + path_);
  std::ostringstream row;
  row << m.round << ',' << m.env_steps << ','
      << format_double(m.episode_return_mean) << ','
      << format_double(m.episode_return_std) << ','
      << format_double(m.critic_loss) << ',' << format_double(m.dsm_loss)
      << ',' << format_double(m.action_grad_norm) << ','
      << format_double(m.goals_reached_frac) << ',';
  for (Eigen::Index i = 0; i < m.per_goal_fractions.size(); ++i) {
    if (i) row << '|';
    row << format_double(m.per_goal_fractions(i));
  }
  out << row.str() << "\n";
  if (!out) throw IoError("metrics write failed: " + path_);
}

std::vector<RoundMetrics> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read metrics file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw IoError("metrics: missing or unexpected header");
  std::vector<RoundMetrics> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    for (;;) {  // keep trailing empty fields (per_goal may be empty)
      size_t pos = line.find(',', start);
      fields.push_back(line.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (fields.size() != 9) throw IoError("metrics: bad row: " + line);
    RoundMetrics m;
    m.round = static_cast<int>(parse_double(fields[0]));
    m.env_steps = static_cast<long>(parse_double(fields[1]));
    m.episode_return_mean = parse_double(fields[2]);
    m.episode_return_std = parse_double(fields[3]);
    m.critic_loss = parse_double(fields[4]);
    m.dsm_loss = parse_double(fields[5]);
    m.action_grad_norm = parse_double(fields[6]);
    m.goals_reached_frac = parse_double(fields[7]);
    std::vector<double> goals;
    if (!fields[8].empty()) {
      std::stringstream gs(fields[8]);
      std::string g;
      while (std::getline(gs, g, '|')) goals.push_back(parse_double(g));
    }
    m.per_goal_fractions.resize(goals.size());
    for (size_t i = 0; i < goals.size(); ++i)
      m.per_goal_fractions(static_cast<Eigen::Index>(i)) = goals[i];
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace dipo
