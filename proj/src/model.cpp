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

#include "dmsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <set>
#include <string>

#include "dmsim/errors.hpp"

namespace dmsim {

using nlohmann::json;

namespace {

void require_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw Error(Errc::ConfigError, std::string(what) + " must be an object");
  for (const auto& item : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return item.key() == k; })) {
      throw Error(Errc::ConfigError, std::string("unknown key '") + item.key() + "' in " + what);
    }
  }
}

std::string boundary_name(Boundary b) { return b == Boundary::Periodic ? "periodic" : "hard-wall"; }

double param(const PotentialTerm& term, const char* key, double fallback) {
  if (!term.params.contains(key)) return fallback;
  const auto& v = term.params.at(key);
  if (!v.is_number()) throw Error(Errc::InvalidModel, "potential parameter '" + std::string(key) + "' must be numeric");
  return v.get<double>();
}

}  // namespace

ModelDescriptor ModelDescriptor::from_json(const json& j) {
  require_keys(j, {"particles", "sites", "spacing", "boundary", "spin_k", "potential", "dimension_cap"},
               "model");
  ModelDescriptor d;
  if (!j.contains("particles") || !j.at("particles").is_array() || j.at("particles").empty()) {
    throw Error(Errc::ConfigError, "model.particles must be a non-empty array");
  }
  d.masses.clear();
  for (const auto& p : j.at("particles")) {
    require_keys(p, {"mass"}, "model.particles[]");
    d.masses.push_back(p.value("mass", 1.0));
  }
  if (!j.contains("sites")) throw Error(Errc::ConfigError, "model.sites is required");
  d.sites = j.at("sites").get<int>();
  d.spacing = j.value("spacing", 1.0);
  const std::string boundary = j.value("boundary", std::string("periodic"));
  if (boundary == "periodic") {
    d.boundary = Boundary::Periodic;
  } else if (boundary == "hard-wall") {
    d.boundary = Boundary::HardWall;
  } else {
    throw Error(Errc::ConfigError, "model.boundary must be 'periodic' or 'hard-wall'");
  }
  d.spin_k = j.value("spin_k", 1);
  d.dimension_cap = j.value("dimension_cap", tol::kDefaultDimensionCap);
  if (j.contains("potential")) {
    const auto& pot = j.at("potential");
    auto read_term = [](const json& t) {
      require_keys(t, {"name", "params"}, "model.potential");
      PotentialTerm term{t.at("name").get<std::string>(), t.value("params", json::object())};
      if (!term.params.is_object()) throw Error(Errc::ConfigError, "potential params must be an object");
      return term;
    };
    if (pot.is_array()) {
      for (const auto& t : pot) d.potential.push_back(read_term(t));
    } else {
      d.potential.push_back(read_term(pot));
    }
  }
  return d;
}

json ModelDescriptor::to_json() const {
  json particles = json::array();
  for (double m : masses) particles.push_back({{"mass", m}});
  json terms = json::array();
  for (const auto& t : potential) terms.push_back({{"name", t.name}, {"params", t.params}});
  return {{"particles", particles},   {"sites", sites},   {"spacing", spacing},
          {"boundary", boundary_name(boundary)}, {"spin_k", spin_k}, {"potential", terms},
          {"dimension_cap", dimension_cap}};
}

struct LatticeModel::Shared {
  ModelDescriptor descriptor;
  Index spatial_dim = 1;
  Index spin_dim = 1;
  std::vector<Index> strides;
  Operator hamiltonian;
  std::once_flag eigen_once;
  std::unique_ptr<EigenSystem> eigen;
  PropagatorCache cache{tol::kPropagatorCacheCapacity};

  Shared(ModelDescriptor d, Index spatial, Index spin, std::vector<Index> s, Operator h)
      : descriptor(std::move(d)), spatial_dim(spatial), spin_dim(spin), strides(std::move(s)),
        hamiltonian(std::move(h)) {}
};

const ModelDescriptor& LatticeModel::descriptor() const noexcept { return shared_->descriptor; }
int LatticeModel::particles() const noexcept { return static_cast<int>(shared_->descriptor.masses.size()); }
int LatticeModel::sites() const noexcept { return shared_->descriptor.sites; }
double LatticeModel::spacing() const noexcept { return shared_->descriptor.spacing; }
Boundary LatticeModel::boundary() const noexcept { return shared_->descriptor.boundary; }
int LatticeModel::spin_k() const noexcept { return shared_->descriptor.spin_k; }
double LatticeModel::mass(int particle) const { return shared_->descriptor.masses.at(static_cast<std::size_t>(particle)); }

double LatticeModel::hopping(int particle) const {
  const double dx = spacing();
  return 1.0 / (2.0 * mass(particle) * dx * dx);
}

double LatticeModel::total_mass() const {
  return std::accumulate(shared_->descriptor.masses.begin(), shared_->descriptor.masses.end(), 0.0);
}

Index LatticeModel::spatial_dim() const noexcept { return shared_->spatial_dim; }
Index LatticeModel::spin_dim() const noexcept { return shared_->spin_dim; }

int LatticeModel::cell_of(double x) const noexcept {
  const int cell = static_cast<int>(std::floor(x / spacing()));
  return std::clamp(cell, 0, sites() - 1);
}

Index LatticeModel::stride(int particle) const { return shared_->strides.at(static_cast<std::size_t>(particle)); }

int LatticeModel::site_of(Index spatial_index, int particle) const {
  return static_cast<int>((spatial_index / stride(particle)) % sites());
}

Index LatticeModel::spatial_index(std::span<const int> site_list) const {
  if (static_cast<int>(site_list.size()) != particles()) {
    throw Error(Errc::DimensionMismatch, "site list length differs from particle count");
  }
  Index index = 0;
  for (int s : site_list) {
    if (s < 0 || s >= sites()) throw Error(Errc::IndexOutOfRange, "site outside the lattice", s);
    index = index * sites() + s;
  }
  return index;
}

Index LatticeModel::neighbor(Index spatial_index, int particle, int direction) const {
  const int site = site_of(spatial_index, particle);
  int next = site + direction;
  if (next < 0 || next >= sites()) {
    if (boundary() == Boundary::HardWall) return -1;
    next = (next + sites()) % sites();
  }
  return spatial_index + static_cast<Index>(next - site) * stride(particle);
}

double LatticeModel::separation(int site_a, int site_b) const noexcept {
  double d = static_cast<double>(site_a - site_b);
  if (boundary() == Boundary::Periodic) {
    const double l = sites();
    d -= l * std::round(d / l);
  }
  return d * spacing();
}

const Operator& LatticeModel::hamiltonian() const noexcept { return shared_->hamiltonian; }

const EigenSystem& LatticeModel::eigensystem() const {
  std::call_once(shared_->eigen_once, [this] {
    shared_->eigen = std::make_unique<EigenSystem>(spectral_decompose(shared_->hamiltonian));
  });
  return *shared_->eigen;
}

PropagatorCache& LatticeModel::propagator_cache() const { return shared_->cache; }

LatticeModel LatticeModel::with_hamiltonian(const Operator& h) const {
  if (h.dim() != dim()) throw Error(Errc::DimensionMismatch, "Hamiltonian dimension differs from model basis");
  if (!h.is_hermitian()) throw Error(Errc::NotHermitian, "Hamiltonian must be Hermitian");
  return LatticeModel(std::make_shared<Shared>(shared_->descriptor, shared_->spatial_dim,
                                               shared_->spin_dim, shared_->strides, h));
}

namespace {

RVector potential_diagonal(const ModelDescriptor& d, const std::vector<Index>& strides, Index spatial_dim,
                           const LatticeModel* geometry) {
  const int n = static_cast<int>(d.masses.size());
  RVector v = RVector::Zero(spatial_dim);
  std::vector<int> site(static_cast<std::size_t>(n));
  for (Index a = 0; a < spatial_dim; ++a) {
    for (int i = 0; i < n; ++i) site[static_cast<std::size_t>(i)] = static_cast<int>((a / strides[static_cast<std::size_t>(i)]) % d.sites);
    double energy = 0.0;
    for (const auto& term : d.potential) {
      if (term.name == "zero") {
        continue;
      } else if (term.name == "harmonic") {
        const double omega = param(term, "omega", 1.0);
        const double center = param(term, "center", 0.5 * d.sites * d.spacing);
        for (int i = 0; i < n; ++i) {
          double x = (site[static_cast<std::size_t>(i)] + 0.5) * d.spacing - center;
          if (d.boundary == Boundary::Periodic) {
            const double box = d.sites * d.spacing;
            x -= box * std::round(x / box);
          }
          energy += 0.5 * d.masses[static_cast<std::size_t>(i)] * omega * omega * x * x;
        }
      } else if (term.name == "onsite") {
        if (!term.params.contains("values") || !term.params.at("values").is_array() ||
            static_cast<int>(term.params.at("values").size()) != d.sites) {
          throw Error(Errc::InvalidModel, "onsite potential needs 'values' with one entry per site");
        }
        for (int i = 0; i < n; ++i) energy += term.params.at("values")[static_cast<std::size_t>(site[static_cast<std::size_t>(i)])].get<double>();
      } else if (term.name == "softened_coulomb" || term.name == "softened_gravity") {
        const double softening = param(term, "softening", 1.0);
        const bool gravity = term.name == "softened_gravity";
        const double coupling = gravity ? param(term, "G", 1.0) : param(term, "coupling", 1.0);
        std::vector<double> charges(static_cast<std::size_t>(n), 1.0);
        if (!gravity && term.params.contains("charges")) {
          charges = term.params.at("charges").get<std::vector<double>>();
          if (static_cast<int>(charges.size()) != n) {
            throw Error(Errc::InvalidModel, "softened_coulomb needs one charge per particle");
          }
        }
        for (int i = 0; i < n; ++i) {
          for (int j = i + 1; j < n; ++j) {
            const double r = geometry->separation(site[static_cast<std::size_t>(i)], site[static_cast<std::size_t>(j)]);
            const double inv = 1.0 / std::sqrt(r * r + softening * softening);
            if (gravity) {
              energy -= coupling * d.masses[static_cast<std::size_t>(i)] * d.masses[static_cast<std::size_t>(j)] * inv;
            } else {
              energy += coupling * charges[static_cast<std::size_t>(i)] * charges[static_cast<std::size_t>(j)] * inv;
            }
          }
        }
      } else {
        throw Error(Errc::UnknownPotential, "unknown potential '" + term.name + "'");
      }
    }
    v[a] = energy;
  }
  return v;
}

}  // namespace

LatticeModel build_lattice_model(const ModelDescriptor& d) {
  const int n = static_cast<int>(d.masses.size());
  if (n < 1) throw Error(Errc::InvalidModel, "model needs at least one particle");
  for (double m : d.masses) {
    if (!(m > 0.0)) throw Error(Errc::InvalidModel, "particle masses must be positive", m);
  }
  if (d.sites < 2) throw Error(Errc::InvalidModel, "need at least two sites", d.sites);
  if (!(d.spacing > 0.0)) throw Error(Errc::InvalidModel, "spacing must be positive", d.spacing);
  if (d.spin_k < 1) throw Error(Errc::InvalidModel, "spin_k must be at least 1", d.spin_k);

  const double full = std::pow(static_cast<double>(d.sites) * d.spin_k, n);
  if (full > static_cast<double>(d.dimension_cap)) {
    throw Error(Errc::DimensionCapExceeded, "basis size exceeds the dimension cap", full);
  }
  Index spatial = 1, spin = 1;
  for (int i = 0; i < n; ++i) {
    spatial *= d.sites;
    spin *= d.spin_k;
  }
  std::vector<Index> strides(static_cast<std::size_t>(n));
  Index s = 1;
  for (int i = n - 1; i >= 0; --i) {
    strides[static_cast<std::size_t>(i)] = s;
    s *= d.sites;
  }

  // Geometry-only model so neighbour and separation logic is shared with the
  // public accessors.
  const Index full_dim = spatial * spin;
  auto geometry = LatticeModel(std::make_shared<LatticeModel::Shared>(
      d, spatial, spin, strides, Operator::hermitian(CMatrix::Zero(full_dim, full_dim))));

  CMatrix h_spatial = CMatrix::Zero(spatial, spatial);
  for (Index a = 0; a < spatial; ++a) {
    for (int i = 0; i < n; ++i) {
      const double t = geometry.hopping(i);
      h_spatial(a, a) += 2.0 * t;
      for (int dir : {-1, +1}) {
        const Index b = geometry.neighbor(a, i, dir);
        if (b >= 0) h_spatial(a, b) -= t;
      }
    }
  }
  h_spatial.diagonal() += potential_diagonal(d, strides, spatial, &geometry).cast<Complex>();

  CMatrix h = CMatrix::Zero(full_dim, full_dim);
  for (Index a = 0; a < spatial; ++a) {
    for (Index b = 0; b < spatial; ++b) {
      if (h_spatial(a, b) == Complex(0.0)) continue;
      for (Index sp = 0; sp < spin; ++sp) h(a * spin + sp, b * spin + sp) = h_spatial(a, b);
    }
  }
  return geometry.with_hamiltonian(Operator::hermitian(h));
}

DensityMatrix partial_trace_spin(const DensityMatrix& w, const LatticeModel& model) {
  if (w.dim() != model.dim()) throw Error(Errc::DimensionMismatch, "state does not live on the model space");
  return partial_trace_spin(w, model.spatial_dim(), model.spin_dim());
}

Subspace::Subspace(CMatrix basis_columns, std::string label)
    : basis_(std::move(basis_columns)), label_(std::move(label)) {
  if (basis_.cols() < 1) throw Error(Errc::EmptyBasis, "subspace needs at least one vector");
  if (basis_.cols() > basis_.rows()) throw Error(Errc::InvalidArgument, "subspace dimension exceeds ambient");
  const CMatrix gram = basis_.adjoint() * basis_;
  const double dev = max_abs(gram - CMatrix::Identity(gram.rows(), gram.cols()));
  if (dev > tol::kAlgebraic) throw Error(Errc::NotOrthonormal, "subspace basis is not orthonormal", dev);
}

Subspace::Subspace(std::span<const CVector> basis, Index ambient_dim, std::string label)
    : Subspace(
          [&] {
            if (basis.empty()) throw Error(Errc::EmptyBasis, "subspace needs at least one vector");
            CMatrix m(ambient_dim, static_cast<Index>(basis.size()));
            for (std::size_t k = 0; k < basis.size(); ++k) {
              if (basis[k].size() != ambient_dim) throw Error(Errc::DimensionMismatch, "basis vector has wrong dimension");
              m.col(static_cast<Index>(k)) = basis[k];
            }
            return m;
          }(),
          std::move(label)) {}

Subspace Subspace::coordinate(std::span<const Index> indices, Index ambient_dim, std::string label) {
  std::set<Index> seen;
  CMatrix m = CMatrix::Zero(ambient_dim, static_cast<Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Index i = indices[k];
    if (i < 0 || i >= ambient_dim) throw Error(Errc::IndexOutOfRange, "basis index outside space", static_cast<double>(i));
    if (!seen.insert(i).second) throw Error(Errc::NotOrthonormal, "repeated basis index", static_cast<double>(i));
    m(i, static_cast<Index>(k)) = 1.0;
  }
  return Subspace(std::move(m), std::move(label));
}

Operator Subspace::projector() const { return projector_onto(basis_); }

Macrovariable Macrovariable::left_count(std::vector<int> left_sites) {
  Macrovariable m;
  m.kind = Kind::LeftCount;
  m.left_sites = std::move(left_sites);
  return m;
}

Macrovariable Macrovariable::custom(std::vector<std::vector<Index>> cells) {
  Macrovariable m;
  m.kind = Kind::Custom;
  m.cells = std::move(cells);
  return m;
}

Macrovariable Macrovariable::from_json(const json& j) {
  require_keys(j, {"type", "cells", "left_sites"}, "macrovariable");
  const std::string type = j.at("type").get<std::string>();
  if (type == "left-count") {
    return left_count(j.value("left_sites", std::vector<int>{}));
  }
  if (type == "custom") {
    if (!j.contains("cells")) throw Error(Errc::ConfigError, "custom macrovariable needs 'cells'");
    return custom(j.at("cells").get<std::vector<std::vector<Index>>>());
  }
  throw Error(Errc::ConfigError, "macrovariable.type must be 'left-count' or 'custom'");
}

std::string Macrovariable::describe() const {
  if (kind == Kind::Custom) return "custom(" + std::to_string(cells.size()) + " cells)";
  std::string s = "left-count{";
  for (std::size_t i = 0; i < left_sites.size(); ++i) s += (i ? "," : "") + std::to_string(left_sites[i]);
  return s + "}";
}

MacroDecomposition::MacroDecomposition(std::vector<Macrospace> cells, std::string macrovariable)
    : cells_(std::move(cells)), macrovariable_(std::move(macrovariable)) {
  if (cells_.empty()) throw Error(Errc::NotAPartition, "decomposition has no cells");
  const Index d = cells_.front().subspace.ambient_dim();
  Index total = 0;
  CMatrix sum = CMatrix::Zero(d, d);
  for (std::size_t mu = 0; mu < cells_.size(); ++mu) {
    total += cells_[mu].subspace.dim();
    sum += cells_[mu].projector.entries();
    for (std::size_t nu = mu + 1; nu < cells_.size(); ++nu) {
      const double overlap = max_abs(cells_[mu].projector.entries() * cells_[nu].projector.entries());
      if (overlap > tol::kProjectorOrthogonality) {
        throw Error(Errc::NotAPartition, "macrospace projectors are not orthogonal", overlap);
      }
    }
  }
  if (total != d) throw Error(Errc::NotAPartition, "macrospace dimensions do not sum to D", static_cast<double>(total));
  const double resolution = max_abs(sum - CMatrix::Identity(d, d));
  if (resolution > tol::kProjectorOrthogonality) {
    throw Error(Errc::NotAPartition, "projectors do not resolve the identity", resolution);
  }
}

std::vector<Index> MacroDecomposition::dims() const {
  std::vector<Index> out;
  out.reserve(cells_.size());
  for (const auto& c : cells_) out.push_back(c.subspace.dim());
  return out;
}

std::size_t MacroDecomposition::equilibrium_index() const {
  std::size_t best = 0;
  for (std::size_t nu = 1; nu < cells_.size(); ++nu) {
    if (cells_[nu].subspace.dim() > cells_[best].subspace.dim()) best = nu;
  }
  return best;
}

Subspace energy_shell(const LatticeModel& model, double energy, double width) {
  if (!(width > 0.0)) throw Error(Errc::InvalidArgument, "shell width must be positive", width);
  const EigenSystem& es = model.eigensystem();
  std::vector<Index> members;
  for (Index k = 0; k < es.eigenvalues.size(); ++k) {
    const double e = es.eigenvalues[k];
    if (e >= energy - tol::kShellEdge && e <= energy + width + tol::kShellEdge) members.push_back(k);
  }
  if (members.empty()) throw Error(Errc::EmptyShell, "no eigenvalue inside the energy shell", energy);
  CMatrix basis(model.dim(), static_cast<Index>(members.size()));
  for (std::size_t c = 0; c < members.size(); ++c) basis.col(static_cast<Index>(c)) = es.eigenvectors.col(members[c]);
  return Subspace(std::move(basis), "shell[" + std::to_string(energy) + "," + std::to_string(energy + width) + "]");
}

MacroDecomposition macro_decomposition(const LatticeModel& model, const Macrovariable& mv) {
  const Index d = model.dim();
  std::vector<std::vector<Index>> cells;
  std::vector<int> values;
  if (mv.kind == Macrovariable::Kind::LeftCount) {
    std::vector<bool> is_left(static_cast<std::size_t>(model.sites()), false);
    if (mv.left_sites.empty()) {
      for (int s = 0; s < model.sites() / 2; ++s) is_left[static_cast<std::size_t>(s)] = true;
    } else {
      for (int s : mv.left_sites) {
        if (s < 0 || s >= model.sites()) throw Error(Errc::IndexOutOfRange, "left site outside lattice", s);
        is_left[static_cast<std::size_t>(s)] = true;
      }
    }
    std::vector<std::vector<Index>> by_count(static_cast<std::size_t>(model.particles() + 1));
    for (Index a = 0; a < model.spatial_dim(); ++a) {
      int count = 0;
      for (int i = 0; i < model.particles(); ++i) count += is_left[static_cast<std::size_t>(model.site_of(a, i))] ? 1 : 0;
      for (Index s = 0; s < model.spin_dim(); ++s) by_count[static_cast<std::size_t>(count)].push_back(a * model.spin_dim() + s);
    }
    for (std::size_t c = 0; c < by_count.size(); ++c) {
      if (by_count[c].empty()) continue;
      cells.push_back(std::move(by_count[c]));
      values.push_back(static_cast<int>(c));
    }
  } else {
    std::vector<int> owner(static_cast<std::size_t>(d), 0);
    for (const auto& cell : mv.cells) {
      if (cell.empty()) throw Error(Errc::NotAPartition, "empty cell in custom partition");
      for (Index i : cell) {
        if (i < 0 || i >= d) throw Error(Errc::NotAPartition, "cell index outside the basis", static_cast<double>(i));
        if (++owner[static_cast<std::size_t>(i)] > 1) throw Error(Errc::NotAPartition, "basis vector assigned to two cells", static_cast<double>(i));
      }
    }
    for (Index i = 0; i < d; ++i) {
      if (owner[static_cast<std::size_t>(i)] == 0) throw Error(Errc::NotAPartition, "basis vector assigned to no cell", static_cast<double>(i));
    }
    cells = mv.cells;
    for (std::size_t c = 0; c < cells.size(); ++c) values.push_back(static_cast<int>(c));
  }

  std::vector<Macrospace> spaces;
  spaces.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    Subspace sub = Subspace::coordinate(cells[c], d, "nu=" + std::to_string(values[c]));
    Operator p = sub.projector();
    spaces.push_back(Macrospace{std::move(sub), std::move(p), values[c]});
  }
  return MacroDecomposition(std::move(spaces), mv.describe());
}

double boltzmann_entropy(const MacroDecomposition& decomposition, std::size_t nu) {
  if (nu >= decomposition.size()) throw Error(Errc::IndexOutOfRange, "macrostate index out of range", static_cast<double>(nu));
  return std::log(static_cast<double>(decomposition[nu].subspace.dim()));
}

DensityMatrix iph_state(const Subspace& subspace) {
  return make_density(subspace.projector().entries() / static_cast<double>(subspace.dim()));
}

DensityMatrix ensemble_state(const LatticeModel& model, const Ensemble& kind) {
  if (const auto* mc = std::get_if<Microcanonical>(&kind)) {
    return iph_state(energy_shell(model, mc->energy, mc->width));
  }
  const double beta = std::get<Canonical>(kind).beta;
  const EigenSystem& es = model.eigensystem();
  // Shift by the ground energy so exp(-βE) cannot overflow for β > 0.
  const double reference = beta >= 0.0 ? es.eigenvalues.minCoeff() : es.eigenvalues.maxCoeff();
  RVector weights = (-beta * (es.eigenvalues.array() - reference)).exp().matrix();
  weights /= weights.sum();
  const CMatrix rho = es.eigenvectors * weights.cast<Complex>().asDiagonal() * es.eigenvectors.adjoint();
  return make_density(rho);
}

}  // namespace dmsim
