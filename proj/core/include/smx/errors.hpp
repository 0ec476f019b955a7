#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smx {

/// Raised by plan() when the implicit operator cannot be factored.
class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by a step when the linear solve misses tolerance or the input is
/// not finite.
class StepError : public std::runtime_error {
 public:
  StepError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A step failure inside an ensemble, tagged with the path that hit it.
class PathError : public std::runtime_error {
 public:
  PathError(const std::string& what, std::size_t path, std::size_t step)
      : std::runtime_error(what), path_(path), step_(step) {}
  std::size_t path() const { return path_; }
  std::size_t step() const { return step_; }

 private:
  std::size_t path_;
  std::size_t step_;
};

/// Bad configuration text: carries the offending key and 1-based line
/// (0 when the problem is not tied to one line).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key, int line)
      : std::runtime_error(what), key_(std::move(key)), line_(line) {}
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

}  // namespace smx
