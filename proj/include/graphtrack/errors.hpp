#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace graphtrack {

/// Malformed input file or stream. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& field, const std::string& what)
      : std::runtime_error(format(line, field, what)), line_(line), field_(field) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

private:
  static std::string format(std::size_t line, const std::string& field, const std::string& what) {
    std::string msg = "line " + std::to_string(line);
    if (!field.empty()) msg += ", field '" + field + "'";
    return msg + ": " + what;
  }

  std::size_t line_ = 0;
  std::string field_;
};

/// Invalid configuration value, unknown key or violated precondition on a parameter.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Matrix shapes that do not chain.
class DimensionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite value produced during forward/backward or training.
class DivergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// No identity correspondence could be established between tracks and ground truth.
class CorrespondenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Numerical procedure could not produce a valid result (e.g. Eigen-CAM on a zero matrix).
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace graphtrack
