// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef PLGAT_ERROR_HPP_
#define PLGAT_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace plgat {

// Failure categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  kUsage = 2,
  kData = 3,
  kNumeric = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string &what)
      : Error(ErrorKind::kUsage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string &what) : Error(ErrorKind::kData, what) {}
};

// Malformed file content. `line` is 1-based; 0 when unknown.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string &what)
      : DataError(line == 0 ? what
                            : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string &what)
      : Error(ErrorKind::kNumeric, what) {}
};

// Operand shapes do not fit the operation.
class ShapeError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace plgat

#endif  // PLGAT_ERROR_HPP_
