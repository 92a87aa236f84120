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

#include "dmsim/grw.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dmsim/errors.hpp"
#include "dmsim/tolerances.hpp"

namespace dmsim {

GrwParams GrwParams::simulation_defaults(const LatticeModel& model) {
  return GrwParams{0.1, 2.0 * model.spacing()};
}

void GrwParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(Errc::InvalidArgument, "lambda must be >= 0", lambda);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(Errc::InvalidArgument, "sigma must be > 0", sigma);
}

namespace {

void check_particle(const LatticeModel& model, int particle) {
  if (particle < 0 || particle >= model.particles()) {
    throw Error(Errc::IndexOutOfRange, "particle index out of range", particle);
  }
}

double min_image(const LatticeModel& model, double d) {
  if (model.boundary() == Boundary::Periodic) {
    const double box = model.box_length();
    d -= box * std::round(d / box);
  }
  return d;
}

int sample_site(const std::vector<double>& weights, RngStream& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    cumulative += weights[j];
    if (u < cumulative) return static_cast<int>(j);
  }
  // Rounding left u above the last partial sum; take the last non-zero cell.
  for (std::size_t j = weights.size(); j-- > 0;) {
    if (weights[j] > 0.0) return static_cast<int>(j);
  }
  return 0;
}

}  // namespace

RVector collapse_rate_diagonal(const LatticeModel& model, int particle, double center, const GrwParams& params) {
  check_particle(model, particle);
  params.validate();
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * params.sigma * params.sigma);
  const Index spin = model.spin_dim();
  RVector diag(model.dim());
  for (Index a = 0; a < model.spatial_dim(); ++a) {
    const double d = min_image(model, model.site_center(model.site_of(a, particle)) - center);
    const double value = norm * std::exp(-d * d / (2.0 * params.sigma * params.sigma));
    for (Index s = 0; s < spin; ++s) diag[a * spin + s] = value;
  }
  return diag;
}

Operator collapse_rate_operator(const LatticeModel& model, int particle, double center, const GrwParams& params) {
  const RVector diag = collapse_rate_diagonal(model, particle, center, params);
  return Operator::hermitian(diag.cast<Complex>().asDiagonal().toDenseMatrix());
}

std::vector<CollapseEvent> sample_collapse_schedule(int particles, const GrwParams& params, double horizon,
                                                    RngStream& rng) {
  params.validate();
  if (!(horizon > 0.0)) throw Error(Errc::InvalidArgument, "horizon must be positive", horizon);
  if (particles < 1) throw Error(Errc::InvalidArgument, "need at least one particle", particles);
  std::vector<CollapseEvent> events;
  if (params.lambda == 0.0) return events;
  const double rate = particles * params.lambda;
  double t = 0.0;
  while (true) {
    t += rng.exponential(rate);
    if (t > horizon) break;
    events.push_back({t, static_cast<int>(rng.below(static_cast<std::uint64_t>(particles)))});
  }
  return events;
}

std::vector<double> collapse_center_weights(const DensityMatrix& w, const LatticeModel& model, int particle,
                                            const GrwParams& params) {
  if (w.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  const RVector diag = w.diagonal();
  std::vector<double> rho(static_cast<std::size_t>(model.sites()));
  double total = 0.0;
  for (int j = 0; j < model.sites(); ++j) {
    const RVector lambda = collapse_rate_diagonal(model, particle, model.site_center(j), params);
    rho[static_cast<std::size_t>(j)] = std::max(lambda.dot(diag), 0.0);
    total += rho[static_cast<std::size_t>(j)];
  }
  if (!(total > 0.0)) throw Error(Errc::DegenerateDensity, "collapse center density vanishes everywhere", total);
  for (double& r : rho) r /= total;
  return rho;
}

std::vector<double> collapse_center_weights(const PureState& psi, const LatticeModel& model, int particle,
                                            const GrwParams& params) {
  if (psi.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  std::vector<double> rho(static_cast<std::size_t>(model.sites()));
  double total = 0.0;
  for (int j = 0; j < model.sites(); ++j) {
    const RVector lambda = collapse_rate_diagonal(model, particle, model.site_center(j), params);
    // ‖Λ^{1/2} ψ‖²
    const double value = (lambda.cwiseSqrt().cast<Complex>().cwiseProduct(psi.amplitudes())).squaredNorm();
    rho[static_cast<std::size_t>(j)] = value;
    total += value;
  }
  if (!(total > 0.0)) throw Error(Errc::DegenerateDensity, "collapse center density vanishes everywhere", total);
  for (double& r : rho) r /= total;
  return rho;
}

DensityMatrix w_collapse_at(const DensityMatrix& w, const LatticeModel& model, int particle, int site,
                            const GrwParams& params) {
  if (w.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  if (site < 0 || site >= model.sites()) throw Error(Errc::IndexOutOfRange, "collapse site outside lattice", site);
  const RVector lambda = collapse_rate_diagonal(model, particle, model.site_center(site), params);
  const double weight = lambda.dot(w.diagonal());
  if (weight < tol::kDegenerateDensity) {
    throw Error(Errc::DegenerateDensity, "tr(W Λ(X)) vanishes at the collapse center", weight);
  }
  const Eigen::VectorXcd root = lambda.cwiseSqrt().cast<Complex>();
  const CMatrix post = root.asDiagonal() * w.entries() * root.asDiagonal();
  return make_density(post / weight);
}

PureState psi_collapse_at(const PureState& psi, const LatticeModel& model, int particle, int site,
                          const GrwParams& params) {
  if (psi.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  if (site < 0 || site >= model.sites()) throw Error(Errc::IndexOutOfRange, "collapse site outside lattice", site);
  const RVector lambda = collapse_rate_diagonal(model, particle, model.site_center(site), params);
  const CVector post = lambda.cwiseSqrt().cast<Complex>().cwiseProduct(psi.amplitudes());
  const double norm = post.norm();
  if (norm * norm < tol::kDegenerateDensity) {
    throw Error(Errc::DegenerateDensity, "‖Λ(X)^{1/2} ψ‖² vanishes at the collapse center", norm * norm);
  }
  return PureState::normalized(post);
}

namespace {

template <class State, class Weights, class Apply>
CollapseResult<State> collapse_with_retries(const LatticeModel& model, int particle, RngStream& rng, double time,
                                            CollapseKind kind, Weights weights_fn, Apply apply) {
  check_particle(model, particle);
  const std::vector<double> weights = weights_fn();
  for (int attempt = 0; attempt < tol::kCollapseRetries; ++attempt) {
    const int site = sample_site(weights, rng);
    try {
      State post = apply(site);
      return CollapseResult<State>{std::move(post), Flash{time, particle, model.site_center(site), kind}};
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateDensity) throw;
    }
  }
  throw Error(Errc::DegenerateDensity, "no admissible collapse center after retries", tol::kCollapseRetries);
}

}  // namespace

CollapseResult<DensityMatrix> w_collapse(const DensityMatrix& w, const LatticeModel& model, int particle,
                                         const GrwParams& params, RngStream& rng, double time) {
  return collapse_with_retries<DensityMatrix>(
      model, particle, rng, time, CollapseKind::Density,
      [&] { return collapse_center_weights(w, model, particle, params); },
      [&](int site) { return w_collapse_at(w, model, particle, site, params); });
}

CollapseResult<PureState> psi_collapse(const PureState& psi, const LatticeModel& model, int particle,
                                       const GrwParams& params, RngStream& rng, double time) {
  return collapse_with_retries<PureState>(
      model, particle, rng, time, CollapseKind::Pure,
      [&] { return collapse_center_weights(psi, model, particle, params); },
      [&](int site) { return psi_collapse_at(psi, model, particle, site, params); });
}

GrwRun run_grw(const LatticeModel& model, const QuantumState& initial, const GrwParams& params, double horizon,
               std::span<const double> checkpoints, std::uint64_t seed, std::uint64_t run_index,
               bool record_mass_density) {
  params.validate();
  std::vector<double> marks(checkpoints.begin(), checkpoints.end());
  std::sort(marks.begin(), marks.end());
  for (double t : marks) {
    if (!(t > 0.0) || t > horizon) throw Error(Errc::InvalidArgument, "checkpoints must lie in (0, T]", t);
  }
  std::visit([&](const auto& s) {
    if (s.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  }, initial);

  RngStream schedule_rng(seed, Stream::CollapseSchedule, run_index);
  RngStream center_rng(seed, Stream::CollapseCenter, run_index);
  const auto events = sample_collapse_schedule(model.particles(), params, horizon, schedule_rng);

  GrwRun run;
  run.seed = seed;
  run.run_index = run_index;
  QuantumState state = initial;
  double now = 0.0;

  auto advance = [&](double t) {
    if (t <= now) return;
    const CMatrix u = unitary_uncached(model, t - now);
    state = std::visit([&](const auto& s) -> QuantumState { return apply_unitary(s, u); }, state);
    now = t;
  };
  auto snapshot = [&](double t) {
    GrwSnapshot snap{t, state, std::nullopt};
    if (record_mass_density) {
      const DensityMatrix w = std::holds_alternative<DensityMatrix>(state) ? std::get<DensityMatrix>(state)
                                                                           : std::get<PureState>(state).density();
      snap.mass_density = mass_density(w, model, t);
    }
    run.snapshots.push_back(std::move(snap));
  };

  std::size_t next_mark = 0;
  for (const auto& event : events) {
    while (next_mark < marks.size() && marks[next_mark] < event.time) {
      advance(marks[next_mark]);
      snapshot(marks[next_mark++]);
    }
    advance(event.time);
    if (auto* w = std::get_if<DensityMatrix>(&state)) {
      auto result = w_collapse(*w, model, event.particle, params, center_rng, event.time);
      state = std::move(result.state);
      run.flashes.push_back(result.flash);
    } else {
      auto result = psi_collapse(std::get<PureState>(state), model, event.particle, params, center_rng, event.time);
      state = std::move(result.state);
      run.flashes.push_back(result.flash);
    }
  }
  while (next_mark < marks.size()) {
    advance(marks[next_mark]);
    snapshot(marks[next_mark++]);
  }
  return run;
}

}  // namespace dmsim
