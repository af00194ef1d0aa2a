// Copyright 2026 The UNCM Authors.
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

#ifndef UNCM_ERRORS_H_
#define UNCM_ERRORS_H_

#include <stdexcept>
#include <string>

namespace uncm {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Shapes of operands do not agree; the message names the op and the shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A NaN or Inf reached a place where only finite values are allowed.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class MalformedEmail : public Error {
 public:
  using Error::Error;
};

// The password lies outside the key space a model can produce.
class UnsupportedPassword : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

// The request cannot be served by the loaded model, e.g. a private seed from a
// model trained without the private attention path.
class Conflict : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace uncm

#endif  // UNCM_ERRORS_H_
