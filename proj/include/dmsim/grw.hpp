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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "dmsim/dynamics.hpp"
#include "dmsim/hilbert.hpp"
#include "dmsim/model.hpp"
#include "dmsim/rng.hpp"

namespace dmsim {

struct GrwParams {
  // Accepted physical values, for reference only: at desk scale they give
  // no events in any feasible run.
  static constexpr double kPhysicalLambdaPerSecond = 1e-15;
  static constexpr double kPhysicalSigmaMeters = 1e-7;

  double lambda = 0.1;  // per particle, 1 / lattice time
  double sigma = 2.0;   // lattice length

  /// λ = 0.1, σ = 2Δx.
  static GrwParams simulation_defaults(const LatticeModel& model);
  void validate() const;
};

enum class CollapseKind { Density, Pure };

struct Flash {
  double time;
  int particle;
  double center;
  CollapseKind kind;
};

struct CollapseEvent {
  double time;
  int particle;
};

/// Λ_k(x) = (2πσ²)^{-1/2} exp(-(Q_k - x)² / 2σ²), diagonal in the position
/// basis; distances use the minimum image on periodic lattices.
Operator collapse_rate_operator(const LatticeModel& model, int particle, double center, const GrwParams& params);
RVector collapse_rate_diagonal(const LatticeModel& model, int particle, double center, const GrwParams& params);

/// Poisson process of total rate Nλ on (0, T]; each event picks a particle
/// uniformly.
std::vector<CollapseEvent> sample_collapse_schedule(int particles, const GrwParams& params, double horizon,
                                                    RngStream& rng);

/// ρ(x_j) = tr(W Λ(x_j)) over the lattice site centers, normalized to sum 1.
std::vector<double> collapse_center_weights(const DensityMatrix& w, const LatticeModel& model, int particle,
                                            const GrwParams& params);
std::vector<double> collapse_center_weights(const PureState& psi, const LatticeModel& model, int particle,
                                            const GrwParams& params);

/// Λ^{1/2} W Λ^{1/2} / tr(W Λ) at the center of `site`.
DensityMatrix w_collapse_at(const DensityMatrix& w, const LatticeModel& model, int particle, int site,
                            const GrwParams& params);
/// Λ^{1/2} ψ / ‖Λ^{1/2} ψ‖ at the center of `site`.
PureState psi_collapse_at(const PureState& psi, const LatticeModel& model, int particle, int site,
                          const GrwParams& params);

template <class State>
struct CollapseResult {
  State state;
  Flash flash;
};

CollapseResult<DensityMatrix> w_collapse(const DensityMatrix& w, const LatticeModel& model, int particle,
                                         const GrwParams& params, RngStream& rng, double time = 0.0);
CollapseResult<PureState> psi_collapse(const PureState& psi, const LatticeModel& model, int particle,
                                       const GrwParams& params, RngStream& rng, double time = 0.0);

struct GrwSnapshot {
  double time;
  QuantumState state;
  std::optional<MassDensityField> mass_density;
};

struct GrwRun {
  std::vector<Flash> flashes;
  std::vector<GrwSnapshot> snapshots;
  std::uint64_t seed = 0;
  std::uint64_t run_index = 0;
};

/// Unitary evolution interrupted by collapses. Event times come from the
/// CollapseSchedule stream and centers from the CollapseCenter stream, both
/// indexed by `run_index`. Checkpoints must lie in (0, T].
GrwRun run_grw(const LatticeModel& model, const QuantumState& initial, const GrwParams& params, double horizon,
               std::span<const double> checkpoints, std::uint64_t seed, std::uint64_t run_index = 0,
               bool record_mass_density = false);

}  // namespace dmsim
