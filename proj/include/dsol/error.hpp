#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsol {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two grid functions (or a function and an operator) live on different grids.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

// Violated precondition: inadmissible parameters, out-of-range exponents, ...
class DomainError : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

// An iterative solver stopped without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : Error(what + " (iterations=" + std::to_string(iterations) + ", residual=" + format(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  static std::string format(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", r);
    return buf;
  }
  int iterations_;
  double residual_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid configuration:";
    for (const auto& s : issues) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> issues_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dsol
