#pragma once
#include <string>
#include <vector>

#include "dipo/train.hpp"

namespace dipo {

// CSV learning-curve log; one row per round, locale-independent formatting.
// per_goal_fractions is a single '|'-joined field.
class MetricsWriter {
 public:
  // append = false truncates and writes the header; append = true assumes
  // the header is already present (checkpoint resume).
  MetricsWriter(const std::string& path, bool append = false);
  void write(const RoundMetrics& m);

 private:
  std::string path_;
};

std::vector<RoundMetrics> read_metrics(const std::string& path);

std::string format_double(double v);  // round-trippable, locale-free

}  // namespace dipo
