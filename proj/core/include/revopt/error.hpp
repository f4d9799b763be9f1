// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace revopt {

/// Base of every domain error raised by the library. The CLI maps these to
/// exit status 1; anything else is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (bad argument, missing field).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data: a bad JSONL record, CSV row, index file or payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Internal consistency violated (e.g. embedding dimensions differ in a batch).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace revopt
