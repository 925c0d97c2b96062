// Copyright 2026 The Glitchscope Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GLITCHSCOPE_ERROR_HPP_
#define GLITCHSCOPE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace glitchscope {

// Bad input or configuration. Detected before any work is done; the CLI maps
// it to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Failure while executing otherwise valid work (divergence, I/O). The CLI maps
// it to exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace glitchscope

#endif  // GLITCHSCOPE_ERROR_HPP_
