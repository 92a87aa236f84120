// Copyright 2026 The dmsim Authors
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

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dmsim {

enum class Errc {
  NotSquare,
  NotHermitian,
  TraceNotOne,
  NotPositive,
  NotNormalized,
  EmptyBasis,
  NotOrthonormal,
  DimensionMismatch,
  DimensionCapExceeded,
  UnknownPotential,
  InvalidModel,
  EmptyShell,
  NotAPartition,
  IndexOutOfRange,
  NegativeDiagonal,
  StepTooLarge,
  ZeroSlice,
  DegenerateDensity,
  SupportMismatch,
  InvalidArgument,
  ConfigError,
  NumericalFault,
};

std::string_view to_string(Errc code) noexcept;

// All library failures are reported through this type. `measured()` carries
// the offending quantity (deviation, trace, eigenvalue, ...) when one exists.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        double measured = std::numeric_limits<double>::quiet_NaN());

  Errc code() const noexcept { return code_; }
  double measured() const noexcept { return measured_; }

 private:
  Errc code_;
  double measured_;
};

}  // namespace dmsim
