//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CPIFORMER_ERRORS_HPP_
#define CPIFORMER_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace cpiformer {

/// Malformed input file. Carries a line number when one is known.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string &what, int line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")"
                                     : what),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

/// Bad run configuration, manifest, or command-line usage.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Filesystem trouble: missing path, unreadable or unwritable file.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint cannot be applied to the current model (name/shape mismatch).
class CheckpointError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Tensor operation called with incompatible shapes.
class ShapeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// NaN/Inf surfaced in a computation, or backward() misuse.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace cpiformer

#endif  // CPIFORMER_ERRORS_HPP_
