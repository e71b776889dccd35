#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <stdexcept>
#include <string>

namespace clinfonce {

inline constexpr const char* kToolkitVersion = "1.0.0";

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixI = Eigen::MatrixXi;

/// Bad flag values, out-of-range parameters, dimension mismatches.
struct ParameterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (files, tables, trees).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Degenerate numerics: zero-norm embeddings, non-finite values.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form; stable across reruns.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace clinfonce
