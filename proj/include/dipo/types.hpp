#pragma once
#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dipo {

// Row-major so flattening (checkpoints, RNG fill order) is the storage order.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Row = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;
using Eigen::VectorXd;

// Exit-code families: validation -> 1, io -> 2, numeric -> 3.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Mat& m) { return m.allFinite(); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace dipo
