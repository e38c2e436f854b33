// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace gradnorm {

// Base for everything the library throws. The CLI maps IoError to exit code 1
// and every other Error to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension mismatch between operands; messages carry both shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A configuration or argument violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// NaN/Inf where finite values are required, or a numerical breakdown
// (diverging loss, non-positive-definite covariance).
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  enum class Kind {
    kOpen,
    kBadMagic,
    kBadVersion,
    kTruncated,
    kDimOverflow,
    kCorrupt,
  };

  IoError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace gradnorm
