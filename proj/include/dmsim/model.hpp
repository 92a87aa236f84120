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
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "dmsim/hilbert.hpp"
#include "dmsim/propagator_cache.hpp"
#include "dmsim/tolerances.hpp"

namespace dmsim {

enum class Boundary { Periodic, HardWall };

struct PotentialTerm {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

/// Desk-scale N-particle model on a 1-D lattice. Units: ħ = k_B = 1.
struct ModelDescriptor {
  std::vector<double> masses{1.0};
  int sites = 8;
  double spacing = 1.0;
  Boundary boundary = Boundary::Periodic;
  int spin_k = 1;
  std::vector<PotentialTerm> potential;
  std::size_t dimension_cap = tol::kDefaultDimensionCap;

  static ModelDescriptor from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Immutable, cheap to copy (shared state). Basis order: particle 1's site is
/// the most significant digit, then the remaining particles, then the spin
/// indices in the same particle order.
class LatticeModel {
 public:
  const ModelDescriptor& descriptor() const noexcept;

  int particles() const noexcept;
  int sites() const noexcept;
  double spacing() const noexcept;
  Boundary boundary() const noexcept;
  int spin_k() const noexcept;
  double mass(int particle) const;
  /// ħ² / (2 m Δx²)
  double hopping(int particle) const;
  double total_mass() const;

  Index spatial_dim() const noexcept;
  Index spin_dim() const noexcept;
  Index dim() const noexcept { return spatial_dim() * spin_dim(); }

  double box_length() const noexcept { return sites() * spacing(); }
  /// Sites sit at the centers of the cells [jΔx, (j+1)Δx).
  double site_center(int site) const noexcept { return (site + 0.5) * spacing(); }
  int cell_of(double x) const noexcept;

  Index stride(int particle) const;
  int site_of(Index spatial_index, int particle) const;
  Index spatial_index(std::span<const int> sites) const;
  /// Spatial index with particle moved by ±1 site, or -1 past a hard wall.
  Index neighbor(Index spatial_index, int particle, int direction) const;
  /// Signed separation of two lattice sites, minimum image when periodic.
  double separation(int site_a, int site_b) const noexcept;

  const Operator& hamiltonian() const noexcept;
  /// Computed on first use; thread-safe.
  const EigenSystem& eigensystem() const;
  PropagatorCache& propagator_cache() const;

  /// Same geometry with an explicitly supplied Hamiltonian.
  LatticeModel with_hamiltonian(const Operator& h) const;

 private:
  struct Shared;
  explicit LatticeModel(std::shared_ptr<Shared> shared) : shared_(std::move(shared)) {}
  friend LatticeModel build_lattice_model(const ModelDescriptor& descriptor);

  std::shared_ptr<Shared> shared_;
};

LatticeModel build_lattice_model(const ModelDescriptor& descriptor);

DensityMatrix partial_trace_spin(const DensityMatrix& w, const LatticeModel& model);

/// Span of orthonormal columns in an ambient space.
class Subspace {
 public:
  Subspace(CMatrix basis_columns, std::string label);
  Subspace(std::span<const CVector> basis, Index ambient_dim, std::string label);
  static Subspace coordinate(std::span<const Index> indices, Index ambient_dim, std::string label);

  const CMatrix& basis() const noexcept { return basis_; }
  CVector vector(Index k) const { return basis_.col(k); }
  Index dim() const noexcept { return basis_.cols(); }
  Index ambient_dim() const noexcept { return basis_.rows(); }
  const std::string& label() const noexcept { return label_; }
  Operator projector() const;

 private:
  CMatrix basis_;
  std::string label_;
};

struct Macrospace {
  Subspace subspace;
  Operator projector;
  int value;  // macrovariable value labelling the cell
};

struct Macrovariable {
  enum class Kind { LeftCount, Custom };
  Kind kind = Kind::LeftCount;
  /// LeftCount: sites counted as "left"; empty means the first half.
  std::vector<int> left_sites;
  /// Custom: a partition of the basis indices.
  std::vector<std::vector<Index>> cells;

  static Macrovariable left_count(std::vector<int> left_sites = {});
  static Macrovariable custom(std::vector<std::vector<Index>> cells);
  static Macrovariable from_json(const nlohmann::json& j);
  std::string describe() const;
};

class MacroDecomposition {
 public:
  MacroDecomposition(std::vector<Macrospace> cells, std::string macrovariable);

  std::size_t size() const noexcept { return cells_.size(); }
  const Macrospace& operator[](std::size_t nu) const { return cells_.at(nu); }
  const std::vector<Macrospace>& cells() const noexcept { return cells_; }
  std::vector<Index> dims() const;
  Index ambient_dim() const { return cells_.front().subspace.ambient_dim(); }
  /// Largest cell (first on ties): the equilibrium candidate.
  std::size_t equilibrium_index() const;
  const std::string& macrovariable() const noexcept { return macrovariable_; }

 private:
  std::vector<Macrospace> cells_;
  std::string macrovariable_;
};

/// Span of eigenvectors with eigenvalue in the closed interval [E, E + δE].
Subspace energy_shell(const LatticeModel& model, double energy, double width);

MacroDecomposition macro_decomposition(const LatticeModel& model, const Macrovariable& macrovariable);

/// k_B ln(dim H_ν) with k_B = 1.
double boltzmann_entropy(const MacroDecomposition& decomposition, std::size_t nu);

/// Normalized projector onto the subspace.
DensityMatrix iph_state(const Subspace& subspace);

struct Microcanonical {
  double energy;
  double width;
};
struct Canonical {
  double beta;
};
using Ensemble = std::variant<Microcanonical, Canonical>;

DensityMatrix ensemble_state(const LatticeModel& model, const Ensemble& kind);

}  // namespace dmsim
