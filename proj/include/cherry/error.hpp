#pragma once

#include <stdexcept>
#include <string>

namespace cherry {

enum class ErrorKind {
  invalid_parameter,
  invalid_target,
  precision_insufficient,
  precision_exhausted,
  discontinuity,
  plateau_stall,
  insufficient_data,
  index_misalignment,
  missing_geometry,
  domain,
  discontinuity_hit,
  config,
  invariant_violation,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by the inverse branch exactly at the critical value; carries g(c-) and g(c+)
// as decimal strings so the payload does not depend on the scalar type.
class DiscontinuityError : public Error {
 public:
  DiscontinuityError(std::string left_limit, std::string right_limit)
      : Error(ErrorKind::discontinuity, "inverse branch evaluated at the critical value"),
        left_limit_(std::move(left_limit)),
        right_limit_(std::move(right_limit)) {}
  const std::string& left_limit() const noexcept { return left_limit_; }
  const std::string& right_limit() const noexcept { return right_limit_; }

 private:
  std::string left_limit_;
  std::string right_limit_;
};

// Config errors carry a JSON-pointer-style path to the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(ErrorKind::config, what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace cherry
