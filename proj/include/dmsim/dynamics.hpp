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

#include <memory>
#include <vector>

#include "json.hpp"

#include "dmsim/hilbert.hpp"
#include "dmsim/model.hpp"

namespace dmsim {

/// e^{-iHt} built from the model's spectral decomposition.
struct Propagator {
  double time;
  std::shared_ptr<const CMatrix> unitary;

  const CMatrix& matrix() const { return *unitary; }
};

/// Cached per model; t is quantized to tol::kTimeQuantum.
Propagator propagator(const LatticeModel& model, double t);
/// Same matrix without touching the cache (for one-off interval lengths).
CMatrix unitary_uncached(const LatticeModel& model, double t);

/// Integrated von Neumann evolution U W U†.
DensityMatrix evolve_density(const DensityMatrix& w0, const LatticeModel& model, double t);
PureState evolve_pure(const PureState& psi0, const LatticeModel& model, double t);
DensityMatrix apply_unitary(const DensityMatrix& w, const CMatrix& u);
PureState apply_unitary(const PureState& psi, const CMatrix& u);

/// -i[H, W]
CMatrix von_neumann_rhs(const LatticeModel& model, const DensityMatrix& w);

/// tr(P_ν W) for every macrospace.
std::vector<double> branch_weights(const DensityMatrix& w, const MacroDecomposition& decomposition);

/// m(x) on the physical lattice, one value per site.
struct MassDensityField {
  std::vector<double> values;
  double time = 0.0;
};

MassDensityField mass_density(const DensityMatrix& w, const LatticeModel& model, double time = 0.0);

/// Uniform grid t_start + k (t_end - t_start) / steps, k = 0..steps.
struct Schedule {
  double t_start = 0.0;
  double t_end = 1.0;
  int steps = 1;

  double dt() const { return (t_end - t_start) / steps; }
  double time(int k) const { return t_start + k * dt(); }
  /// Index of the grid point nearest to t.
  int nearest_step(double t) const;
  void validate() const;

  static Schedule from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

}  // namespace dmsim
