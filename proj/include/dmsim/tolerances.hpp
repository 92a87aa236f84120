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

#include <cstddef>

// Numerical tolerances shared by every module. Nothing else in the library
// hard-codes a validation threshold.
namespace dmsim::tol {

// Algebraic identities: hermiticity, trace, normalization, idempotence.
inline constexpr double kAlgebraic = 1e-10;
// Spectral reconstruction and unitarity of eigenvector matrices.
inline constexpr double kSpectral = 1e-8;
// Mutual orthogonality of macrospace projectors.
inline constexpr double kProjectorOrthogonality = 1e-9;
// Eigenvalues this close to an energy-shell edge are inside the shell.
inline constexpr double kShellEdge = 1e-12;
// Configuration-space density below this fraction of its maximum is a node.
inline constexpr double kNodeRelative = 1e-12;
// Velocities beyond this multiple of spacing/dt abort integration.
inline constexpr double kSpeedCapFactor = 10.0;
// Collapse centers whose tr(W Λ) falls below this are rejected.
inline constexpr double kDegenerateDensity = 1e-14;
inline constexpr int kCollapseRetries = 100;
// Conditional slices with smaller norm cannot be normalized.
inline constexpr double kZeroSlice = 1e-12;
// Propagator cache quantizes times to this grid.
inline constexpr double kTimeQuantum = 1e-9;
inline constexpr std::size_t kPropagatorCacheCapacity = 256;
inline constexpr std::size_t kDefaultDimensionCap = 4096;

}  // namespace dmsim::tol
