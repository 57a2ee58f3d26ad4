// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgchain {

/// Input violates a contract (bad query, bad config, inconsistent graphs).
/// Maps to exit code 1 in the CLI.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File missing, unreadable, or malformed on disk. Maps to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax error in the query language; `offset` is a byte offset into the input.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : ValidationError("parse error at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace kgchain
