// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace scfc {

enum class ErrorKind {
  Contract,         // violated precondition of an operation
  Dimension,        // shape mismatch between operands
  Numeric,          // NaN or Inf produced or consumed
  Internal,         // broken internal invariant
  Io,               // file could not be opened, read or written
  BadMagic,         // file does not start with the expected magic bytes
  Truncated,        // payload shorter than the header promises
  SizeMismatch,     // header dimensions disagree with payload length
  Version,          // unknown format version
  Fingerprint,      // checkpoint built for a different model configuration
  MissingParameter, // checkpoint lacks a parameter the model needs
  ShapeMismatch,    // checkpoint tensor has the wrong shape
  Parse,            // malformed text document
  Usage,            // invalid configuration or command line
  Precondition,     // run-order requirement not met (e.g. RL before XE)
  IdMismatch,       // hypothesis/reference image id sets differ
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::Contract, message);
}

inline void require_dims(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::Dimension, message);
}

}  // namespace scfc
