#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chokemap {

enum class ErrorKind {
  Parse,
  ConflictingRelationship,
  MissingEdge,
  UnknownTarget,
  GraphTooLarge,
  MissingCountryData,
  Unreachable,
  AliasConflict,
  InfeasibleSpec,
  UnknownAttacker,
  Config,
  LocalNetwork,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// A malformed input line. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

  /// Same error with `file` prepended to the message.
  ParseError in_file(const std::string& file) const;

 private:
  struct Raw {};
  ParseError(Raw, std::size_t line, const std::string& message);

  std::size_t line_;
};

}  // namespace chokemap
