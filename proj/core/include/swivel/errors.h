/*
 * Copyright 2026 The Swivel Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SWIVEL_ERRORS_H_
#define SWIVEL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace swivel {

// Base class for all errors raised by the library. The subclasses map onto
// the process exit codes used by the command-line tool.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments or configuration (exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed, missing, or inconsistent input data (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values encountered during optimization (exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace swivel

#endif  // SWIVEL_ERRORS_H_
