#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace semrel {

// Base of every error raised by the library. `kind()` is a short stable
// identifier used for structured diagnostics (CLI stderr, HTTP bodies).
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& detail)
      : std::runtime_error(detail), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& detail)
      : Error("invalid_argument", detail) {}
};

class NotFound : public Error {
 public:
  explicit NotFound(const std::string& detail) : Error("not_found", detail) {}
};

class Conflict : public Error {
 public:
  explicit Conflict(const std::string& detail) : Error("conflict", detail) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& detail) : Error("io_error", detail) {}
};

// Undefined statistic (constant input to a correlation, zero-variance gold).
class DegenerateInput : public Error {
 public:
  explicit DegenerateInput(const std::string& detail)
      : Error("degenerate_input", detail) {}
};

// A malformed record in a data file. `row()` is the 1-based data row
// (the header is row 0).
class FormatError : public Error {
 public:
  FormatError(std::size_t row, const std::string& detail)
      : Error("format_error", "row " + std::to_string(row) + ": " + detail),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace semrel
