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

#include "dmsim/dynamics.hpp"

#include <cmath>

#include "dmsim/errors.hpp"
#include "dmsim/tolerances.hpp"

namespace dmsim {

namespace {

CMatrix build_unitary(const EigenSystem& es, double t) {
  const Eigen::VectorXcd phases =
      (es.eigenvalues.cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
  return es.eigenvectors * phases.asDiagonal() * es.eigenvectors.adjoint();
}

}  // namespace

Propagator propagator(const LatticeModel& model, double t) {
  const auto key = static_cast<std::int64_t>(std::llround(t / tol::kTimeQuantum));
  const double quantized = static_cast<double>(key) * tol::kTimeQuantum;
  auto entry = model.propagator_cache().get_or_compute(
      key, [&] { return build_unitary(model.eigensystem(), quantized); });
  return Propagator{quantized, std::move(entry)};
}

CMatrix unitary_uncached(const LatticeModel& model, double t) {
  return build_unitary(model.eigensystem(), t);
}

DensityMatrix apply_unitary(const DensityMatrix& w, const CMatrix& u) {
  if (u.rows() != w.dim()) throw Error(Errc::DimensionMismatch, "propagator and state dimensions differ");
  const CMatrix evolved = u * w.entries() * u.adjoint();
  return make_density(0.5 * (evolved + evolved.adjoint()));
}

PureState apply_unitary(const PureState& psi, const CMatrix& u) {
  if (u.rows() != psi.dim()) throw Error(Errc::DimensionMismatch, "propagator and state dimensions differ");
  return PureState::normalized(u * psi.amplitudes());
}

DensityMatrix evolve_density(const DensityMatrix& w0, const LatticeModel& model, double t) {
  if (w0.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  return apply_unitary(w0, propagator(model, t).matrix());
}

PureState evolve_pure(const PureState& psi0, const LatticeModel& model, double t) {
  if (psi0.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  return apply_unitary(psi0, propagator(model, t).matrix());
}

CMatrix von_neumann_rhs(const LatticeModel& model, const DensityMatrix& w) {
  if (w.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  const CMatrix& h = model.hamiltonian().entries();
  return Complex(0.0, -1.0) * (h * w.entries() - w.entries() * h);
}

std::vector<double> branch_weights(const DensityMatrix& w, const MacroDecomposition& decomposition) {
  if (w.dim() != decomposition.ambient_dim()) {
    throw Error(Errc::DimensionMismatch, "state and decomposition dimensions differ");
  }
  std::vector<double> p;
  p.reserve(decomposition.size());
  for (const auto& cell : decomposition.cells()) p.push_back(expectation(cell.projector, w).real());
  return p;
}

MassDensityField mass_density(const DensityMatrix& w, const LatticeModel& model, double time) {
  if (w.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  MassDensityField field{std::vector<double>(static_cast<std::size_t>(model.sites()), 0.0), time};
  const Index spin = model.spin_dim();
  for (Index a = 0; a < model.spatial_dim(); ++a) {
    double weight = 0.0;
    for (Index s = 0; s < spin; ++s) weight += w(a * spin + s, a * spin + s).real();
    for (int i = 0; i < model.particles(); ++i) {
      field.values[static_cast<std::size_t>(model.site_of(a, i))] += model.mass(i) * weight;
    }
  }
  return field;
}

int Schedule::nearest_step(double t) const {
  const auto k = static_cast<int>(std::llround((t - t_start) / dt()));
  if (k < 0 || k > steps) throw Error(Errc::IndexOutOfRange, "time outside the schedule", t);
  return k;
}

void Schedule::validate() const {
  if (steps < 1) throw Error(Errc::ConfigError, "schedule.steps must be at least 1", steps);
  if (!(t_end > t_start)) throw Error(Errc::ConfigError, "schedule.t_end must exceed t_start", t_end);
}

Schedule Schedule::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigError, "schedule must be an object");
  for (const auto& item : j.items()) {
    if (item.key() != "t_start" && item.key() != "t_end" && item.key() != "steps") {
      throw Error(Errc::ConfigError, "unknown key '" + item.key() + "' in schedule");
    }
  }
  Schedule s{j.value("t_start", 0.0), j.at("t_end").get<double>(), j.at("steps").get<int>()};
  s.validate();
  return s;
}

nlohmann::json Schedule::to_json() const {
  return {{"t_start", t_start}, {"t_end", t_end}, {"steps", steps}};
}

}  // namespace dmsim
