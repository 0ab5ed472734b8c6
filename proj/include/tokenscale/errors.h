// Copyright 2026 The tokenscale Authors. All Rights Reserved.
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

#ifndef TOKENSCALE_ERRORS_H_
#define TOKENSCALE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace tokenscale {

// Base of every error raised by the library. The CLI maps the subclasses
// onto exit codes (see cli.h).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition or value range.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class UnsupportedMetricError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DuplicateRecordError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// No tokens left to process after caching.
class DegenerateConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnderdeterminedFitError : public Error {
 public:
  using Error::Error;
};

class InfeasibleBudgetError : public Error {
 public:
  using Error::Error;
};

// Every visual token count predicts the same error.
class FlatLawError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Token count is not a perfect square.
class GridError : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

// Stride does not divide the grid side.
class TilingError : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tokenscale

#endif  // TOKENSCALE_ERRORS_H_
