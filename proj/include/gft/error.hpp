#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace gft {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or violated preconditions. The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A grid point in (channel-or-level, row, column) coordinates.
struct GridLocation {
  std::size_t level = 0;
  std::size_t row = 0;
  std::size_t col = 0;

  std::string to_string() const;
};

/// Raised when a formula leaves its domain, e.g. the saturation denominator
/// p - 0.378 e_s becoming nonpositive.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, GridLocation where, std::string field = {});

  const GridLocation& location() const noexcept { return where_; }
  const std::string& field() const noexcept { return field_; }
  /// The message without the location suffix.
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
  GridLocation where_;
  std::string field_;
};

/// Raised when an evolution produces non-finite values or leaves the domain
/// of the saturation chain. Carries the step (or block) index and location.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, std::size_t step, std::optional<GridLocation> where);

  std::size_t step() const noexcept { return step_; }
  const std::optional<GridLocation>& location() const noexcept { return where_; }
  /// The message without the step and location suffix.
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
  std::size_t step_;
  std::optional<GridLocation> where_;
};

enum class FormatErrorKind { bad_magic, unsupported_version, truncated_payload, checksum_mismatch, malformed_header, io };

class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}

  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

}  // namespace gft
