// Copyright 2026 The wemg Authors.
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

namespace wemg {

/// Base class for every error raised by the library. The message is the
/// user-facing description; `kind()` is a stable machine-readable tag used by
/// the CLI error JSON.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message, std::string kind = "error")
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& message) : Error(message, "shape") {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message) : Error(message, "numeric") {}
};

/// Raised when a validation or test block would influence training or
/// normalization statistics.
class LeakageError : public Error {
 public:
  explicit LeakageError(const std::string& message) : Error(message, "leakage") {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message) : Error(message, "format") {}
};

}  // namespace wemg
