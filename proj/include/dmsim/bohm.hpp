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
#include <span>
#include <vector>

#include "json.hpp"

#include "dmsim/dynamics.hpp"
#include "dmsim/hilbert.hpp"
#include "dmsim/model.hpp"
#include "dmsim/rng.hpp"

namespace dmsim {

/// Particle positions in [0, L·Δx), one coordinate per particle.
struct Configuration {
  std::vector<double> positions;
};

/// Wraps (periodic) or clamps (hard wall) every coordinate into the box.
Configuration canonicalize(const LatticeModel& model, Configuration q);
/// Spatial basis index of the cell holding q.
Index cell_index(const LatticeModel& model, const Configuration& q);

struct Trajectory {
  std::vector<double> times;
  std::vector<Configuration> configurations;
  std::uint64_t stream_id = 0;
};

/// Guidance field of one instant, tabulated on the lattice.
///
/// For every particle i and cell a the table holds the bond term
/// B_i(a) = (ħ/m_i) Im W(a + e_i, a) / Δx and the diagonal D(a) = W(a, a),
/// spin traced. At a cell center the velocity is
/// (B_i(a - e_i) + B_i(a)) / (2 D(a)), i.e. (ħ/m_i) Im[∂_i W / W] with a
/// central difference. Inside the cell the numerator is linear in the local
/// coordinate of particle i, which keeps the lattice continuity equation
/// exact for the continuum flow. Cells with D below the node threshold have
/// zero velocity.
class VelocityField {
 public:
  static VelocityField from_density(const DensityMatrix& w, const LatticeModel& model);
  static VelocityField from_pure(const PureState& psi, const LatticeModel& model);

  std::vector<double> at(const Configuration& q) const;
  std::vector<double> at_site(Index spatial_index) const;
  double density(Index spatial_index) const { return density_[spatial_index]; }
  const RVector& densities() const noexcept { return density_; }
  /// Σ_i (B_i(a) - B_i(a - e_i)) / Δx: lattice divergence of the flux out of cell a.
  double flux_divergence(Index spatial_index) const;

 private:
  VelocityField(const LatticeModel& model, RVector density, std::vector<RVector> bonds);
  double bond(int particle, Index a, int direction) const;

  LatticeModel model_;
  RVector density_;
  std::vector<RVector> bonds_;
  double node_threshold_;
};

std::vector<double> w_velocity(const DensityMatrix& w, const LatticeModel& model, const Configuration& q);
std::vector<double> psi_velocity(const PureState& psi, const LatticeModel& model, const Configuration& q);

/// Inverse-CDF draw over the spin-traced diagonal, jittered uniformly inside
/// the chosen cell.
Configuration sample_initial_config(const DensityMatrix& w, const LatticeModel& model, RngStream& rng);
Configuration sample_initial_config(const PureState& psi, const LatticeModel& model, RngStream& rng);

/// Velocity fields at every schedule point and midpoint, as needed by RK4.
class FieldTimeline {
 public:
  static FieldTimeline from_density(const LatticeModel& model, const DensityMatrix& w0, const Schedule& schedule);
  static FieldTimeline from_pure(const LatticeModel& model, const PureState& psi0, const Schedule& schedule);

  const Schedule& schedule() const noexcept { return schedule_; }
  /// Field at t_start + half_steps · dt / 2.
  const VelocityField& at_half_step(int half_steps) const { return fields_.at(static_cast<std::size_t>(half_steps)); }
  const VelocityField& at_step(int step) const { return at_half_step(2 * step); }
  const LatticeModel& model() const noexcept { return model_; }

 private:
  FieldTimeline(LatticeModel model, Schedule schedule, std::vector<VelocityField> fields)
      : model_(std::move(model)), schedule_(schedule), fields_(std::move(fields)) {}

  LatticeModel model_;
  Schedule schedule_;
  std::vector<VelocityField> fields_;
};

/// Fixed-step RK4. `record_steps` selects the schedule points stored in the
/// trajectory; empty means all of them.
Trajectory integrate_trajectory(const FieldTimeline& timeline, const Configuration& q0,
                                std::uint64_t stream_id = 0, std::span<const int> record_steps = {});
/// Configurations at the given schedule steps, in the order the steps are listed.
std::vector<Configuration> configurations_at_steps(const FieldTimeline& timeline, const Configuration& q0,
                                                  std::uint64_t stream_id, std::span<const int> steps);
Trajectory integrate_trajectory(const LatticeModel& model, const DensityMatrix& w0, const Configuration& q0,
                                const Schedule& schedule);

/// Reduced model for the particles listed in `subsystem` (ascending).
LatticeModel subsystem_model(const LatticeModel& model, std::span<const int> subsystem);

/// ψ_cond(q1) = C Ψ(q1, Q2). Environment positions are given for the
/// particles not in `subsystem`, in ascending particle order, and snap to
/// their cells. The largest-magnitude amplitude is made real positive.
PureState conditional_wavefunction(const PureState& psi, const LatticeModel& model,
                                   std::span<const int> subsystem, const Configuration& environment);

/// W_cond(q1 s1, q1' s1') ∝ Σ_{s2} Ψ(q1, Q2; s1 s2) Ψ*(q1', Q2; s1' s2), trace one.
DensityMatrix conditional_density(const PureState& psi, const LatticeModel& model,
                                  std::span<const int> subsystem, const Configuration& environment);

/// |∂_t W(q,q,t) + div(W(q,q,t) v)| summed over cells, with ∂_t by central
/// difference of step h.
double continuity_residual(const LatticeModel& model, const DensityMatrix& w0, double t, double h);

struct EquivarianceCheckpoint {
  double t;
  double tv_distance;
  std::size_t ensemble_size;
};

struct EquivarianceReport {
  std::vector<EquivarianceCheckpoint> checkpoints;
  nlohmann::json to_json() const;
};

/// Histogram of the spatial cells occupied by `configurations`, normalized.
std::vector<double> cell_histogram(const LatticeModel& model, std::span<const Configuration> configurations);

/// Samples `ensemble_size` initial configurations from W0 (InitialSample
/// stream, one index per trajectory), integrates all of them and compares
/// the empirical cell occupation with diag W(t) at each checkpoint.
/// `trajectories_out`, when non-null, receives the first `keep` trajectories.
EquivarianceReport equivariance_test(const LatticeModel& model, const DensityMatrix& w0, std::size_t ensemble_size,
                                     const Schedule& schedule, std::span<const double> checkpoint_times,
                                     std::uint64_t seed, std::vector<Trajectory>* trajectories_out = nullptr,
                                     std::size_t keep = 0);

}  // namespace dmsim
