// Copyright (c) 2026 The SLT Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace slt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, invalid configuration, missing data.
/// The CLI maps these to exit code 1.
class InputError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public InputError {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : InputError("invalid config field '" + field + "': " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class IoError : public InputError {
 public:
  using InputError::InputError;
};

class FormatError : public InputError {
 public:
  using InputError::InputError;
};

// Feature file errors.
class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedFileError : public FormatError {
 public:
  TruncatedFileError(const std::string& path, std::size_t expected, std::size_t actual);
  std::size_t expected_bytes() const { return expected_; }
  std::size_t actual_bytes() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class NonFiniteValueError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Raised when an optimizer sees a NaN/Inf gradient.
class NonFiniteGradientError : public Error {
 public:
  explicit NonFiniteGradientError(const std::string& parameter)
      : Error("non-finite gradient in parameter '" + parameter + "'"), parameter_(parameter) {}
  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

class NonFiniteLossError : public Error {
 public:
  using Error::Error;
};

/// Autograd misuse (double backward, non-scalar loss).
class TapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace slt
