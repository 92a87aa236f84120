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

#include "dmsim/bohm.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>

#include "dmsim/errors.hpp"
#include "dmsim/tolerances.hpp"
#include "parallel.hpp"

namespace dmsim {

namespace {

double wrap_coordinate(const LatticeModel& model, double x) {
  const double box = model.box_length();
  if (model.boundary() == Boundary::Periodic) {
    x = std::fmod(x, box);
    if (x < 0.0) x += box;
    if (x >= box) x = 0.0;
    return x;
  }
  return std::clamp(x, 0.0, std::nextafter(box, 0.0));
}

void check_in_box(const LatticeModel& model, const Configuration& q) {
  if (static_cast<int>(q.positions.size()) != model.particles()) {
    throw Error(Errc::DimensionMismatch, "configuration length differs from particle count");
  }
  for (double x : q.positions) {
    if (!std::isfinite(x)) throw Error(Errc::NumericalFault, "non-finite particle position");
  }
}

}  // namespace

Configuration canonicalize(const LatticeModel& model, Configuration q) {
  for (double& x : q.positions) x = wrap_coordinate(model, x);
  return q;
}

Index cell_index(const LatticeModel& model, const Configuration& q) {
  Index a = 0;
  for (int i = 0; i < model.particles(); ++i) {
    a += static_cast<Index>(model.cell_of(wrap_coordinate(model, q.positions[static_cast<std::size_t>(i)]))) *
         model.stride(i);
  }
  return a;
}

VelocityField::VelocityField(const LatticeModel& model, RVector density, std::vector<RVector> bonds)
    : model_(model), density_(std::move(density)), bonds_(std::move(bonds)) {
  node_threshold_ = tol::kNodeRelative * density_.maxCoeff();
}

VelocityField VelocityField::from_density(const DensityMatrix& w, const LatticeModel& model) {
  if (w.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  const DensityMatrix spatial = partial_trace_spin(w, model);
  const CMatrix& e = spatial.entries();
  const Index n = model.spatial_dim();
  RVector density = e.diagonal().real();
  std::vector<RVector> bonds;
  for (int i = 0; i < model.particles(); ++i) {
    RVector b = RVector::Zero(n);
    const double scale = 1.0 / (model.mass(i) * model.spacing());
    for (Index a = 0; a < n; ++a) {
      const Index up = model.neighbor(a, i, +1);
      if (up >= 0) b[a] = scale * e(up, a).imag();
    }
    bonds.push_back(std::move(b));
  }
  return VelocityField(model, std::move(density), std::move(bonds));
}

VelocityField VelocityField::from_pure(const PureState& psi, const LatticeModel& model) {
  if (psi.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  const Index n = model.spatial_dim();
  const Index spin = model.spin_dim();
  const CVector& amp = psi.amplitudes();
  RVector density = RVector::Zero(n);
  for (Index a = 0; a < n; ++a) {
    for (Index s = 0; s < spin; ++s) density[a] += std::norm(amp[a * spin + s]);
  }
  std::vector<RVector> bonds;
  for (int i = 0; i < model.particles(); ++i) {
    RVector b = RVector::Zero(n);
    const double scale = 1.0 / (model.mass(i) * model.spacing());
    for (Index a = 0; a < n; ++a) {
      const Index up = model.neighbor(a, i, +1);
      if (up < 0) continue;
      Complex sum = 0.0;
      for (Index s = 0; s < spin; ++s) sum += amp[up * spin + s] * std::conj(amp[a * spin + s]);
      b[a] = scale * sum.imag();
    }
    bonds.push_back(std::move(b));
  }
  return VelocityField(model, std::move(density), std::move(bonds));
}

double VelocityField::bond(int particle, Index a, int direction) const {
  if (direction > 0) return bonds_[static_cast<std::size_t>(particle)][a];
  const Index down = model_.neighbor(a, particle, -1);
  return down < 0 ? 0.0 : bonds_[static_cast<std::size_t>(particle)][down];
}

std::vector<double> VelocityField::at(const Configuration& q) const {
  check_in_box(model_, q);
  const int n = model_.particles();
  std::vector<double> local(static_cast<std::size_t>(n));
  Index a = 0;
  for (int i = 0; i < n; ++i) {
    const double x = wrap_coordinate(model_, q.positions[static_cast<std::size_t>(i)]);
    const int cell = model_.cell_of(x);
    local[static_cast<std::size_t>(i)] = std::clamp(x / model_.spacing() - cell, 0.0, 1.0);
    a += static_cast<Index>(cell) * model_.stride(i);
  }
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  const double d = density_[a];
  if (!(d > node_threshold_)) return v;
  for (int i = 0; i < n; ++i) {
    const double s = local[static_cast<std::size_t>(i)];
    v[static_cast<std::size_t>(i)] = ((1.0 - s) * bond(i, a, -1) + s * bond(i, a, +1)) / d;
  }
  return v;
}

std::vector<double> VelocityField::at_site(Index a) const {
  std::vector<double> v(static_cast<std::size_t>(model_.particles()), 0.0);
  const double d = density_[a];
  if (!(d > node_threshold_)) return v;
  for (int i = 0; i < model_.particles(); ++i) {
    v[static_cast<std::size_t>(i)] = 0.5 * (bond(i, a, -1) + bond(i, a, +1)) / d;
  }
  return v;
}

double VelocityField::flux_divergence(Index a) const {
  double div = 0.0;
  for (int i = 0; i < model_.particles(); ++i) div += (bond(i, a, +1) - bond(i, a, -1)) / model_.spacing();
  return div;
}

std::vector<double> w_velocity(const DensityMatrix& w, const LatticeModel& model, const Configuration& q) {
  auto v = VelocityField::from_density(w, model).at(q);
  for (double x : v) {
    if (std::isnan(x)) throw Error(Errc::NumericalFault, "NaN in W-guidance velocity");
  }
  return v;
}

std::vector<double> psi_velocity(const PureState& psi, const LatticeModel& model, const Configuration& q) {
  auto v = VelocityField::from_pure(psi, model).at(q);
  for (double x : v) {
    if (std::isnan(x)) throw Error(Errc::NumericalFault, "NaN in guidance velocity");
  }
  return v;
}

namespace {

Configuration sample_from_diagonal(const RVector& diag, const LatticeModel& model, RngStream& rng) {
  double total = 0.0;
  for (Index a = 0; a < diag.size(); ++a) {
    if (diag[a] < -tol::kAlgebraic) throw Error(Errc::NegativeDiagonal, "negative configuration density", diag[a]);
    total += std::max(diag[a], 0.0);
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(Errc::TraceNotOne, "configuration density does not sum to 1", total);
  const double target = rng.uniform() * total;
  double cumulative = 0.0;
  Index chosen = diag.size() - 1;
  for (Index a = 0; a < diag.size(); ++a) {
    cumulative += std::max(diag[a], 0.0);
    if (target < cumulative) {
      chosen = a;
      break;
    }
  }
  while (chosen > 0 && diag[chosen] <= 0.0) --chosen;
  Configuration q;
  q.positions.resize(static_cast<std::size_t>(model.particles()));
  for (int i = 0; i < model.particles(); ++i) {
    const double jitter = rng.uniform();
    q.positions[static_cast<std::size_t>(i)] = (model.site_of(chosen, i) + jitter) * model.spacing();
  }
  return q;
}

RVector spatial_diagonal(const CMatrix& w, const LatticeModel& model) {
  const Index spin = model.spin_dim();
  RVector d = RVector::Zero(model.spatial_dim());
  for (Index a = 0; a < model.spatial_dim(); ++a) {
    for (Index s = 0; s < spin; ++s) d[a] += w(a * spin + s, a * spin + s).real();
  }
  return d;
}

}  // namespace

Configuration sample_initial_config(const DensityMatrix& w, const LatticeModel& model, RngStream& rng) {
  if (w.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  return sample_from_diagonal(spatial_diagonal(w.entries(), model), model, rng);
}

Configuration sample_initial_config(const PureState& psi, const LatticeModel& model, RngStream& rng) {
  if (psi.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  const Index spin = model.spin_dim();
  RVector d = RVector::Zero(model.spatial_dim());
  for (Index a = 0; a < model.spatial_dim(); ++a) {
    for (Index s = 0; s < spin; ++s) d[a] += std::norm(psi[a * spin + s]);
  }
  return sample_from_diagonal(d, model, rng);
}

FieldTimeline FieldTimeline::from_density(const LatticeModel& model, const DensityMatrix& w0,
                                          const Schedule& schedule) {
  schedule.validate();
  std::vector<VelocityField> fields;
  fields.reserve(static_cast<std::size_t>(2 * schedule.steps + 1));
  for (int h = 0; h <= 2 * schedule.steps; ++h) {
    const double elapsed = 0.5 * h * schedule.dt();
    const DensityMatrix w = h == 0 ? w0 : apply_unitary(w0, unitary_uncached(model, elapsed));
    fields.push_back(VelocityField::from_density(w, model));
  }
  return FieldTimeline(model, schedule, std::move(fields));
}

FieldTimeline FieldTimeline::from_pure(const LatticeModel& model, const PureState& psi0, const Schedule& schedule) {
  schedule.validate();
  std::vector<VelocityField> fields;
  fields.reserve(static_cast<std::size_t>(2 * schedule.steps + 1));
  for (int h = 0; h <= 2 * schedule.steps; ++h) {
    const double elapsed = 0.5 * h * schedule.dt();
    const PureState psi = h == 0 ? psi0 : apply_unitary(psi0, unitary_uncached(model, elapsed));
    fields.push_back(VelocityField::from_pure(psi, model));
  }
  return FieldTimeline(model, schedule, std::move(fields));
}

Trajectory integrate_trajectory(const FieldTimeline& timeline, const Configuration& q0, std::uint64_t stream_id,
                                std::span<const int> record_steps) {
  const LatticeModel& model = timeline.model();
  const Schedule& schedule = timeline.schedule();
  check_in_box(model, q0);
  const double dt = schedule.dt();
  const double speed_limit = tol::kSpeedCapFactor * model.spacing() / dt;
  const std::size_t n = q0.positions.size();

  auto velocity = [&](int half_step, const std::vector<double>& x) {
    auto v = timeline.at_half_step(half_step).at(Configuration{x});
    for (double c : v) {
      if (std::isnan(c)) throw Error(Errc::NumericalFault, "NaN velocity during integration");
      if (std::abs(c) > speed_limit) {
        throw Error(Errc::StepTooLarge, "velocity exceeds the speed cap for this time step", c);
      }
    }
    return v;
  };
  auto shifted = [&](const std::vector<double>& x, const std::vector<double>& k, double h) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + h * k[i];
    return out;
  };

  Trajectory traj;
  traj.stream_id = stream_id;
  std::vector<bool> keep(static_cast<std::size_t>(schedule.steps + 1), record_steps.empty());
  for (int s : record_steps) {
    if (s < 0 || s > schedule.steps) throw Error(Errc::IndexOutOfRange, "record step outside schedule", s);
    keep[static_cast<std::size_t>(s)] = true;
  }

  std::vector<double> x = canonicalize(model, q0).positions;
  if (keep[0]) {
    traj.times.push_back(schedule.time(0));
    traj.configurations.push_back(Configuration{x});
  }
  for (int step = 0; step < schedule.steps; ++step) {
    const auto k1 = velocity(2 * step, x);
    const auto k2 = velocity(2 * step + 1, shifted(x, k1, 0.5 * dt));
    const auto k3 = velocity(2 * step + 1, shifted(x, k2, 0.5 * dt));
    const auto k4 = velocity(2 * step + 2, shifted(x, k3, dt));
    for (std::size_t i = 0; i < n; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    x = canonicalize(model, Configuration{x}).positions;
    if (keep[static_cast<std::size_t>(step + 1)]) {
      traj.times.push_back(schedule.time(step + 1));
      traj.configurations.push_back(Configuration{x});
    }
  }
  return traj;
}

std::vector<Configuration> configurations_at_steps(const FieldTimeline& timeline, const Configuration& q0,
                                                  std::uint64_t stream_id, std::span<const int> steps) {
  const Trajectory traj = integrate_trajectory(timeline, q0, stream_id, steps);
  // Recorded configurations come back in ascending step order without repeats.
  std::vector<int> order(steps.begin(), steps.end());
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  std::vector<Configuration> out;
  out.reserve(steps.size());
  for (int step : steps) {
    const auto pos = static_cast<std::size_t>(std::lower_bound(order.begin(), order.end(), step) - order.begin());
    out.push_back(traj.configurations[pos]);
  }
  return out;
}

Trajectory integrate_trajectory(const LatticeModel& model, const DensityMatrix& w0, const Configuration& q0,
                                const Schedule& schedule) {
  return integrate_trajectory(FieldTimeline::from_density(model, w0, schedule), q0);
}

LatticeModel subsystem_model(const LatticeModel& model, std::span<const int> subsystem) {
  if (subsystem.empty()) throw Error(Errc::InvalidArgument, "subsystem must contain a particle");
  ModelDescriptor d = model.descriptor();
  d.masses.clear();
  int previous = -1;
  for (int i : subsystem) {
    if (i <= previous || i >= model.particles()) {
      throw Error(Errc::InvalidArgument, "subsystem indices must be ascending particle labels", i);
    }
    previous = i;
    d.masses.push_back(model.mass(i));
  }
  for (auto& term : d.potential) {
    if (term.params.contains("charges")) {
      const auto all = term.params.at("charges").get<std::vector<double>>();
      std::vector<double> kept;
      for (int i : subsystem) kept.push_back(all.at(static_cast<std::size_t>(i)));
      term.params["charges"] = kept;
    }
  }
  return build_lattice_model(d);
}

namespace {

struct SliceLayout {
  std::vector<int> sub;
  std::vector<int> env;
  Index env_offset = 0;  // spatial index contribution of the environment cells
};

SliceLayout slice_layout(const LatticeModel& model, std::span<const int> subsystem, const Configuration& environment) {
  SliceLayout layout;
  std::vector<bool> in_sub(static_cast<std::size_t>(model.particles()), false);
  int previous = -1;
  for (int i : subsystem) {
    if (i <= previous || i >= model.particles()) {
      throw Error(Errc::InvalidArgument, "subsystem indices must be ascending particle labels", i);
    }
    previous = i;
    in_sub[static_cast<std::size_t>(i)] = true;
    layout.sub.push_back(i);
  }
  for (int i = 0; i < model.particles(); ++i) {
    if (!in_sub[static_cast<std::size_t>(i)]) layout.env.push_back(i);
  }
  if (environment.positions.size() != layout.env.size()) {
    throw Error(Errc::DimensionMismatch, "environment configuration length differs from environment size");
  }
  for (std::size_t e = 0; e < layout.env.size(); ++e) {
    const double x = wrap_coordinate(model, environment.positions[e]);
    layout.env_offset += static_cast<Index>(model.cell_of(x)) * model.stride(layout.env[e]);
  }
  return layout;
}

// Full-model basis index for subsystem sites `sub_spatial` (digits over the
// subsystem particles) and spin digits split between subsystem and environment.
Index full_index(const LatticeModel& model, const SliceLayout& layout, Index sub_spatial, Index sub_spin,
                 Index env_spin) {
  const int k = model.spin_k();
  const Index l = model.sites();
  Index spatial = layout.env_offset;
  Index rest = sub_spatial;
  for (auto it = layout.sub.rbegin(); it != layout.sub.rend(); ++it) {
    spatial += (rest % l) * model.stride(*it);
    rest /= l;
  }
  std::vector<Index> digits(static_cast<std::size_t>(model.particles()), 0);
  Index s1 = sub_spin;
  for (auto it = layout.sub.rbegin(); it != layout.sub.rend(); ++it) {
    digits[static_cast<std::size_t>(*it)] = s1 % k;
    s1 /= k;
  }
  Index s2 = env_spin;
  for (auto it = layout.env.rbegin(); it != layout.env.rend(); ++it) {
    digits[static_cast<std::size_t>(*it)] = s2 % k;
    s2 /= k;
  }
  Index spin = 0;
  for (Index d : digits) spin = spin * k + d;
  return spatial * model.spin_dim() + spin;
}

Index power(Index base, std::size_t exponent) {
  Index out = 1;
  for (std::size_t i = 0; i < exponent; ++i) out *= base;
  return out;
}

}  // namespace

PureState conditional_wavefunction(const PureState& psi, const LatticeModel& model, std::span<const int> subsystem,
                                   const Configuration& environment) {
  if (psi.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  if (model.spin_k() != 1) {
    throw Error(Errc::InvalidArgument, "conditional wave functions need spinless particles; use conditional_density");
  }
  const SliceLayout layout = slice_layout(model, subsystem, environment);
  const Index n = power(model.sites(), layout.sub.size());
  CVector slice(n);
  for (Index a = 0; a < n; ++a) slice[a] = psi[full_index(model, layout, a, 0, 0)];
  const double norm = slice.norm();
  if (norm < tol::kZeroSlice) throw Error(Errc::ZeroSlice, "wave function vanishes on the environment slice", norm);
  Index largest = 0;
  for (Index a = 1; a < n; ++a) {
    if (std::abs(slice[a]) > std::abs(slice[largest])) largest = a;
  }
  const Complex phase = std::conj(slice[largest]) / std::abs(slice[largest]);
  return PureState::normalized(slice * phase);
}

DensityMatrix conditional_density(const PureState& psi, const LatticeModel& model, std::span<const int> subsystem,
                                  const Configuration& environment) {
  if (psi.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  const SliceLayout layout = slice_layout(model, subsystem, environment);
  const Index n_spatial = power(model.sites(), layout.sub.size());
  const Index n_spin = power(model.spin_k(), layout.sub.size());
  const Index env_spin = power(model.spin_k(), layout.env.size());
  const Index n = n_spatial * n_spin;
  // Columns: environment spin values; rows: subsystem (site, spin) index.
  CMatrix slices(n, env_spin);
  for (Index a = 0; a < n_spatial; ++a) {
    for (Index s1 = 0; s1 < n_spin; ++s1) {
      for (Index s2 = 0; s2 < env_spin; ++s2) slices(a * n_spin + s1, s2) = psi[full_index(model, layout, a, s1, s2)];
    }
  }
  const double norm_sq = slices.squaredNorm();
  if (std::sqrt(norm_sq) < tol::kZeroSlice) {
    throw Error(Errc::ZeroSlice, "wave function vanishes on the environment slice", std::sqrt(norm_sq));
  }
  return make_density(slices * slices.adjoint() / norm_sq);
}

double continuity_residual(const LatticeModel& model, const DensityMatrix& w0, double t, double h) {
  const RVector forward = partial_trace_spin(evolve_density(w0, model, t + h), model).diagonal();
  const RVector backward = partial_trace_spin(evolve_density(w0, model, t - h), model).diagonal();
  const VelocityField field = VelocityField::from_density(evolve_density(w0, model, t), model);
  double residual = 0.0;
  for (Index a = 0; a < model.spatial_dim(); ++a) {
    const double dt_density = (forward[a] - backward[a]) / (2.0 * h);
    residual += std::abs(dt_density + field.flux_divergence(a));
  }
  return residual;
}

nlohmann::json EquivarianceReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : checkpoints) {
    list.push_back({{"t", c.t}, {"tv_distance", c.tv_distance}, {"M", c.ensemble_size}});
  }
  return {{"checkpoints", list}};
}

std::vector<double> cell_histogram(const LatticeModel& model, std::span<const Configuration> configurations) {
  std::vector<double> counts(static_cast<std::size_t>(model.spatial_dim()), 0.0);
  for (const auto& q : configurations) counts[static_cast<std::size_t>(cell_index(model, q))] += 1.0;
  for (double& c : counts) c /= static_cast<double>(configurations.size());
  return counts;
}

EquivarianceReport equivariance_test(const LatticeModel& model, const DensityMatrix& w0, std::size_t ensemble_size,
                                     const Schedule& schedule, std::span<const double> checkpoint_times,
                                     std::uint64_t seed, std::vector<Trajectory>* trajectories_out,
                                     std::size_t keep) {
  if (ensemble_size < 100) throw Error(Errc::InvalidArgument, "ensemble size must be at least 100", static_cast<double>(ensemble_size));
  std::vector<int> steps;
  for (double t : checkpoint_times) steps.push_back(schedule.nearest_step(t));
  const FieldTimeline timeline = FieldTimeline::from_density(model, w0, schedule);

  std::vector<std::vector<Configuration>> at_checkpoint(steps.size(), std::vector<Configuration>(ensemble_size));
  std::vector<Trajectory> kept(std::min(keep, ensemble_size));
  detail::parallel_for(static_cast<std::int64_t>(ensemble_size), [&](std::int64_t idx) {
    RngStream rng(seed, Stream::InitialSample, static_cast<std::uint64_t>(idx));
    const Configuration q0 = sample_initial_config(w0, model, rng);
    const auto index = static_cast<std::size_t>(idx);
    if (index < kept.size()) {
      kept[index] = integrate_trajectory(timeline, q0, static_cast<std::uint64_t>(idx));
      for (std::size_t c = 0; c < steps.size(); ++c) {
        at_checkpoint[c][index] = kept[index].configurations[static_cast<std::size_t>(steps[c])];
      }
    } else {
      const auto recorded = configurations_at_steps(timeline, q0, static_cast<std::uint64_t>(idx), steps);
      for (std::size_t c = 0; c < steps.size(); ++c) at_checkpoint[c][index] = recorded[c];
    }
  });

  EquivarianceReport report;
  for (std::size_t c = 0; c < steps.size(); ++c) {
    const std::vector<double> empirical = cell_histogram(model, at_checkpoint[c]);
    const RVector& exact = timeline.at_step(steps[c]).densities();
    double tv = 0.0;
    for (std::size_t a = 0; a < empirical.size(); ++a) tv += std::abs(empirical[a] - exact[static_cast<Index>(a)]);
    report.checkpoints.push_back({schedule.time(steps[c]), 0.5 * tv, ensemble_size});
  }
  if (trajectories_out) *trajectories_out = std::move(kept);
  return report;
}

}  // namespace dmsim
