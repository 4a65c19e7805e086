#pragma once

#include <stdexcept>
#include <string>

namespace dsforge {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A document (manifest, config, vector file, lexicon) does not match its schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or image codec failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace dsforge
