#pragma once

#include <stdexcept>
#include <string>

namespace d2ace {

// Error categories surfaced by the library. Callers catch by category; the
// message carries the detail.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScheduleError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_shape(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ShapeError(std::string(op) + ": " + detail);
}

}  // namespace detail

}  // namespace d2ace
