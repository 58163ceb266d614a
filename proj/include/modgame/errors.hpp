//
// Copyright 2026 The modgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <stdexcept>
#include <string>

namespace modgame {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A bit stream ended before a complete code word, or carried trailing bits.
class MalformedCode : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

// Nonpositive or otherwise invalid numeric inputs.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Sample counts or coefficient layouts that do not match.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A decode step had no refinement (or finer-localization) strings to use.
class EmptyTranscript : public Error {
 public:
  using Error::Error;
};

// Transcript roles do not agree with the role assignment of the plan.
class RoleMismatch : public Error {
 public:
  using Error::Error;
};

// Invalid experiment configuration. Maps to CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An internal invariant check failed. Maps to CLI exit code 2.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace modgame
