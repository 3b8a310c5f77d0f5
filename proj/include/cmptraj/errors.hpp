// Copyright 2026 The cmptraj Authors
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

#ifndef CMPTRAJ_ERRORS_HPP
#define CMPTRAJ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cmptraj {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A precondition on an input value failed (normalization, unitarity, config fields).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// An invariant broke during integration. Carries the simulation time.
class NumericalError : public Error {
 public:
  NumericalError(double time, const std::string& what)
      : Error("t=" + std::to_string(time) + ": " + what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace cmptraj

#endif  // CMPTRAJ_ERRORS_HPP
