// Copyright 2026 The freechaos Authors.
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
#include <cstdint>
#include <stdexcept>
#include <string>

namespace freechaos {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed pairings, wrong orders, precondition failures.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Kernels defined on different grids, or a grid that cannot host a kernel.
class GridError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Operator applied outside its domain (e.g. N0^{-1} with a nonzero mean).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DecompositionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Exact integer result does not fit the configured width.
class ArithmeticError : public Error {
 public:
  using Error::Error;
};

// A configured complexity cap would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Complexity caps shared by the engines. Every field can be overridden from
// the command line or the environment; the library itself never reads the
// environment.
struct Limits {
  int all_pairings_max_n = 16;
  int nc_pairings_max_n = 24;
  int moment_max_total_order = 12;
  std::size_t kernel_max_entries = std::size_t{1} << 24;
  std::uint64_t integral_max_iterations = std::uint64_t{1} << 32;
};

}  // namespace freechaos
