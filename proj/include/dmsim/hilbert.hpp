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

#include <complex>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

namespace dmsim {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

class DensityMatrix;

/// Unit vector in the configuration basis.
class PureState {
 public:
  /// Validates the norm; throws NotNormalized beyond tolerance.
  explicit PureState(CVector amplitudes);
  /// Scales `v` to unit norm. Throws NotNormalized for a zero vector.
  static PureState normalized(CVector v);

  const CVector& amplitudes() const noexcept { return amplitudes_; }
  Index dim() const noexcept { return amplitudes_.size(); }
  Complex operator[](Index i) const { return amplitudes_[i]; }

  /// |ψ⟩⟨ψ|
  DensityMatrix density() const;

 private:
  CVector amplitudes_;
};

/// Positive, unit-trace, Hermitian matrix. Only obtainable through
/// make_density, so every instance satisfies the invariants.
class DensityMatrix {
 public:
  const CMatrix& entries() const noexcept { return entries_; }
  Index dim() const noexcept { return entries_.rows(); }
  Complex operator()(Index i, Index j) const { return entries_(i, j); }

  /// tr(W²)
  double purity() const;
  /// Smallest eigenvalue recorded at validation time (after clipping).
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }
  RVector diagonal() const { return entries_.diagonal().real(); }

 private:
  friend DensityMatrix make_density(const CMatrix& entries);
  DensityMatrix(CMatrix entries, double min_eigenvalue)
      : entries_(std::move(entries)), min_eigenvalue_(min_eigenvalue) {}

  CMatrix entries_;
  double min_eigenvalue_;
};

/// Validates hermiticity, unit trace and positivity. Eigenvalues in
/// [-tol, 0) are clipped to zero and the trace renormalized.
DensityMatrix make_density(const CMatrix& entries);

class Operator {
 public:
  /// Validates hermiticity within tolerance and stores the symmetrized matrix.
  static Operator hermitian(const CMatrix& entries);
  static Operator general(CMatrix entries);

  const CMatrix& entries() const noexcept { return entries_; }
  Index dim() const noexcept { return entries_.rows(); }
  bool is_hermitian() const noexcept { return hermitian_; }

 private:
  Operator(CMatrix entries, bool hermitian) : entries_(std::move(entries)), hermitian_(hermitian) {}

  CMatrix entries_;
  bool hermitian_;
};

/// Either representation of a quantum state.
using QuantumState = std::variant<DensityMatrix, PureState>;

struct EigenSystem {
  RVector eigenvalues;   // ascending
  CMatrix eigenvectors;  // columns
};

Operator projector_onto(std::span<const CVector> basis, Index dim);
/// Same, with the basis given as the columns of a matrix.
Operator projector_onto(const CMatrix& columns);

/// Traces out the spin factor of a (spatial ⊗ spin) density matrix. The spin
/// index runs fastest in the basis ordering.
DensityMatrix partial_trace_spin(const DensityMatrix& w, Index spatial_dim, Index spin_dim);

EigenSystem spectral_decompose(const Operator& h);
CMatrix reconstruct(const EigenSystem& system);

/// tr(A W)
Complex expectation(const Operator& a, const DensityMatrix& w);

double max_abs(const CMatrix& m);
double hermiticity_deviation(const CMatrix& m);

// JSON matrix schema: {"dim": n, "entries": [[re, im], ...]} row-major.
nlohmann::json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const CVector& v);
CVector vector_from_json(const nlohmann::json& j);

}  // namespace dmsim
