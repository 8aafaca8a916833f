// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace sheetscan {

/// Base of every error thrown by the library. `code()` is a short
/// machine-parsable token (the CLI prints it on stderr).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Malformed textual input (A1 ranges, CLI values).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("E_PARSE", what) {}
};

/// Structured input that does not follow the JSON/CSV schema. `path` is a
/// JSON pointer-ish location when known.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error("E_SCHEMA", what) {}
};

/// Well-formed input that breaks a domain rule (overlapping labels,
/// out-of-bounds boxes, missing annotations).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error("E_VALIDATION", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("E_IO", what) {}
};

/// Internal consistency violation; indicates a bug rather than bad input.
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what) : Error("E_INVARIANT", what) {}
};

}  // namespace sheetscan
