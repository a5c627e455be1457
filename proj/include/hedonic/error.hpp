// Copyright 2026 The Hedonic Index Authors
// SPDX-License-Identifier: Apache-2.0
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

#ifndef HEDONIC_ERROR_HPP_
#define HEDONIC_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hedonic {

/// Base of every error raised by the library. Callers that only care about
/// "something in the input or the numerics was wrong" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input bytes. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a domain rule (negative sales, etc).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Shapes that do not compose.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition (empty context, t - lag < 0, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A ratio or statistic that is undefined for the given data
/// (empty universe, zero variance, zero-norm vector).
class UndefinedError : public Error {
 public:
  using Error::Error;
};

/// Lookups and alignment of keyed data (unknown product, mismatched grids).
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Index computations: empty match set, missing hedonic coverage,
/// degenerate denominators.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Hedonic basket members without a hedonic price. `offenders()` lists
/// them as "product_id@period".
class CoverageError : public IndexError {
 public:
  CoverageError(const std::string& what, std::vector<std::string> offenders)
      : IndexError(what), offenders_(std::move(offenders)) {}
  const std::vector<std::string>& offenders() const noexcept { return offenders_; }

 private:
  std::vector<std::string> offenders_;
};

/// Optimisation produced a non-finite loss or gradient.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch)
      : Error(epoch >= 0 ? what + " (epoch " + std::to_string(epoch) + ")"
                         : what),
        epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// Singular or under-determined regression design.
class SingularDesignError : public Error {
 public:
  using Error::Error;
};

}  // namespace hedonic

#endif  // HEDONIC_ERROR_HPP_
