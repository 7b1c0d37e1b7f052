// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vadr {

/// Base for every error the engine raises deliberately.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (bad argument, bad config).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Excision would remove every frame of a timeline.
class EmptyTimeline : public Error {
 public:
  EmptyTimeline() : Error("excision leaves no frames") {}
};

/// Oracle transport failed after all retries.
class OracleUnavailable : public Error {
 public:
  using Error::Error;
};

/// Oracle replied, but the reply violates the wire schema.
class OracleMalformed : public Error {
 public:
  using Error::Error;
};

/// Data validation failure with a named error code and (when known) a 1-based line.
class ValidationError : public Error {
 public:
  ValidationError(std::string code, std::string detail, std::size_t line = 0)
      : Error(format(code, detail, line)),
        code_(std::move(code)),
        detail_(std::move(detail)),
        line_(line) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& code, const std::string& detail,
                            std::size_t line) {
    std::string out = line > 0 ? "line " + std::to_string(line) + ": " : "";
    return out + code + ": " + detail;
  }

  std::string code_;
  std::string detail_;
  std::size_t line_;
};

}  // namespace vadr
