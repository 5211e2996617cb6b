#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace aspca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Sorted, zero-based coordinate indices.
using Indices = std::vector<int>;

enum class ErrorKind {
  invalid_argument,
  infeasible,
  retry_exhausted,
  numerical,
  parse,
};

// All library failures are reported through this exception; `kind()` lets
// callers (notably the CLI) map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::invalid_argument, what);
}

}  // namespace aspca
