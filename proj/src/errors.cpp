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

#include "dmsim/errors.hpp"

namespace dmsim {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NotSquare: return "NotSquare";
    case Errc::NotHermitian: return "NotHermitian";
    case Errc::TraceNotOne: return "TraceNotOne";
    case Errc::NotPositive: return "NotPositive";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::EmptyBasis: return "EmptyBasis";
    case Errc::NotOrthonormal: return "NotOrthonormal";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DimensionCapExceeded: return "DimensionCapExceeded";
    case Errc::UnknownPotential: return "UnknownPotential";
    case Errc::InvalidModel: return "InvalidModel";
    case Errc::EmptyShell: return "EmptyShell";
    case Errc::NotAPartition: return "NotAPartition";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::NegativeDiagonal: return "NegativeDiagonal";
    case Errc::StepTooLarge: return "StepTooLarge";
    case Errc::ZeroSlice: return "ZeroSlice";
    case Errc::DegenerateDensity: return "DegenerateDensity";
    case Errc::SupportMismatch: return "SupportMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigError: return "ConfigError";
    case Errc::NumericalFault: return "NumericalFault";
  }
  return "Unknown";
}

namespace {

std::string format_message(Errc code, const std::string& message, double measured) {
  std::string out{to_string(code)};
  out += ": ";
  out += message;
  if (!std::isnan(measured)) {
    out += " (measured ";
    out += std::to_string(measured);
    out += ")";
  }
  return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message, double measured)
    : std::runtime_error(format_message(code, message, measured)),
      code_(code),
      measured_(measured) {}

}  // namespace dmsim
