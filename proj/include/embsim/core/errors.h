// Copyright 2026 The embsim Authors.
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

namespace embsim {

// Root of every error the library raises. The CLI maps ConfigError and its
// kin to exit status 2 and ValidationError to exit status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user configuration: bad calibration file, impossible sweep grid,
// pooling larger than the table, and so on.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An index or row outside the table it addresses.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

// Local buffer shape violates an operation's precondition.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Ranks disagree at a collective (payload shape, kind, or participation).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// A record routed to a rank that does not own it. Always a bug upstream.
class RoutingError : public Error {
 public:
  using Error::Error;
};

class UnimplementedError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace embsim
