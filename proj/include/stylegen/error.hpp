// Copyright 2026 The Stylegen Authors. All Rights Reserved.
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stylegen {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by parse_mr; offset is the byte position of the first violation.
class MalformedMR : public Error {
 public:
  MalformedMR(const std::string& what, std::size_t offset)
      : Error("malformed MR at offset " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ConstraintModeMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  EmptyInput() : Error("empty input") {}
};

class UnknownPlaceholder : public Error {
 public:
  explicit UnknownPlaceholder(const std::string& token)
      : Error("unknown placeholder: " + token) {}
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class NonScalarLoss : public Error {
 public:
  NonScalarLoss() : Error("backward() requires a scalar loss") {}
};

class DivergedTraining : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("empty corpus") {}
};

class UnknownPersonalityLabel : public Error {
 public:
  explicit UnknownPersonalityLabel(const std::string& label)
      : Error("unknown personality label: " + label) {}
};

class ZeroVariance : public Error {
 public:
  ZeroVariance() : Error("pearson correlation undefined: zero variance") {}
};

/// A dataset line failed to parse; line numbers are 1-based.
class MalformedRecord : public Error {
 public:
  MalformedRecord(const std::string& what, std::size_t line)
      : Error("malformed record at line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ChecksumMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Generic I/O or format failure on artifacts (checkpoints, vocab files).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace stylegen
