// Copyright 2026 The margsyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MARGSYN_ERROR_HPP_
#define MARGSYN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace margsyn {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (CSV cells, config documents, row length mismatch).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A value lies outside the domain its type or schema allows.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A computation exceeded a configured resource cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// A numerical quantity came out NaN or infinite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace margsyn

#endif  // MARGSYN_ERROR_HPP_
