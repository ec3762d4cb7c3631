#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgrs {

enum class ErrorKind {
  Syntax,
  UnknownIdentifier,
  Arity,
  Domain,
  SingularMetric,
  DegeneratePlane,
  DimensionMismatch,
  NotCommuting,
  DegenerateSubspace,
  BadFrame,
  CrossCheckMismatch,
  StepFailure,
  EmptyLevel,
  Parse,
  Validation,
  Io,
  InvalidArgument,
};

const char* error_kind_name(ErrorKind kind);

// Every failure raised by the toolkit carries a kind so that the C API can map
// it onto a status code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Expression-level error with the byte offset into the parsed text.
class SyntaxError : public Error {
 public:
  SyntaxError(ErrorKind kind, const std::string& message, std::size_t offset)
      : Error(kind, message + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Spec-file error located by 1-based line and column.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, int column)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ", column " +
                                    std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace kgrs
