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

#include "dmsim/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "dmsim/errors.hpp"
#include "dmsim/tolerances.hpp"

namespace dmsim {

PureState::PureState(CVector amplitudes) : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() == 0) throw Error(Errc::InvalidArgument, "empty state vector");
  const double norm = amplitudes_.norm();
  if (std::abs(norm - 1.0) > tol::kAlgebraic) {
    throw Error(Errc::NotNormalized, "state vector norm differs from 1", norm);
  }
}

PureState PureState::normalized(CVector v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(Errc::NotNormalized, "cannot normalize a zero or non-finite vector", norm);
  }
  v /= norm;
  return PureState(std::move(v));
}

DensityMatrix PureState::density() const {
  return make_density(amplitudes_ * amplitudes_.adjoint());
}

double DensityMatrix::purity() const { return entries_.squaredNorm(); }

double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double hermiticity_deviation(const CMatrix& m) { return max_abs(m - m.adjoint()); }

DensityMatrix make_density(const CMatrix& entries) {
  if (entries.rows() != entries.cols() || entries.rows() == 0) {
    throw Error(Errc::NotSquare, "density matrix must be square and non-empty");
  }
  if (!entries.allFinite()) throw Error(Errc::NumericalFault, "density matrix has non-finite entries");
  const double herm = hermiticity_deviation(entries);
  if (herm > tol::kAlgebraic) {
    throw Error(Errc::NotHermitian, "max |W - W†| exceeds tolerance", herm);
  }
  const double trace = entries.trace().real();
  if (std::abs(trace - 1.0) > tol::kAlgebraic) {
    throw Error(Errc::TraceNotOne, "trace differs from 1", trace);
  }
  CMatrix w = 0.5 * (entries + entries.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(w);
  if (solver.info() != Eigen::Success) throw Error(Errc::NumericalFault, "eigensolver failed");
  const RVector& ev = solver.eigenvalues();
  const double min_ev = ev.minCoeff();
  if (min_ev < -tol::kAlgebraic) {
    throw Error(Errc::NotPositive, "negative eigenvalue", min_ev);
  }
  if (min_ev < 0.0) {
    RVector clipped = ev.cwiseMax(0.0);
    clipped /= clipped.sum();
    w = solver.eigenvectors() * clipped.asDiagonal() * solver.eigenvectors().adjoint();
    w = 0.5 * (w + w.adjoint());
    return DensityMatrix(std::move(w), 0.0);
  }
  return DensityMatrix(std::move(w), min_ev);
}

Operator Operator::hermitian(const CMatrix& entries) {
  if (entries.rows() != entries.cols()) throw Error(Errc::NotSquare, "operator must be square");
  const double herm = hermiticity_deviation(entries);
  if (herm > tol::kAlgebraic) throw Error(Errc::NotHermitian, "operator is not Hermitian", herm);
  return Operator(0.5 * (entries + entries.adjoint()), true);
}

Operator Operator::general(CMatrix entries) {
  if (entries.rows() != entries.cols()) throw Error(Errc::NotSquare, "operator must be square");
  return Operator(std::move(entries), false);
}

Operator projector_onto(std::span<const CVector> basis, Index dim) {
  if (basis.empty()) throw Error(Errc::EmptyBasis, "projector needs at least one vector");
  CMatrix columns(dim, static_cast<Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (basis[k].size() != dim) throw Error(Errc::DimensionMismatch, "basis vector has wrong dimension");
    columns.col(static_cast<Index>(k)) = basis[k];
  }
  return projector_onto(columns);
}

Operator projector_onto(const CMatrix& columns) {
  if (columns.cols() == 0) throw Error(Errc::EmptyBasis, "projector needs at least one vector");
  const CMatrix gram = columns.adjoint() * columns;
  Index worst_i = 0, worst_j = 0;
  double worst = 0.0;
  for (Index i = 0; i < gram.rows(); ++i) {
    for (Index j = i; j < gram.cols(); ++j) {
      const double dev = std::abs(gram(i, j) - (i == j ? 1.0 : 0.0));
      if (dev > worst) {
        worst = dev;
        worst_i = i;
        worst_j = j;
      }
    }
  }
  if (worst > tol::kAlgebraic) {
    throw Error(Errc::NotOrthonormal,
                "vectors " + std::to_string(worst_i) + " and " + std::to_string(worst_j) +
                    " are not orthonormal",
                std::abs(gram(worst_i, worst_j)));
  }
  return Operator::hermitian(columns * columns.adjoint());
}

DensityMatrix partial_trace_spin(const DensityMatrix& w, Index spatial_dim, Index spin_dim) {
  if (spin_dim < 1 || spatial_dim < 1 || spatial_dim * spin_dim != w.dim()) {
    throw Error(Errc::DimensionMismatch, "density matrix dimension is not spatial × spin");
  }
  if (spin_dim == 1) return w;
  CMatrix reduced = CMatrix::Zero(spatial_dim, spatial_dim);
  const CMatrix& e = w.entries();
  for (Index a = 0; a < spatial_dim; ++a) {
    for (Index b = 0; b < spatial_dim; ++b) {
      Complex sum = 0.0;
      for (Index s = 0; s < spin_dim; ++s) sum += e(a * spin_dim + s, b * spin_dim + s);
      reduced(a, b) = sum;
    }
  }
  return make_density(reduced);
}

EigenSystem spectral_decompose(const Operator& h) {
  if (!h.is_hermitian()) throw Error(Errc::NotHermitian, "spectral decomposition needs a Hermitian operator");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h.entries());
  if (solver.info() != Eigen::Success) throw Error(Errc::NumericalFault, "eigensolver failed");
  return EigenSystem{solver.eigenvalues(), solver.eigenvectors()};
}

CMatrix reconstruct(const EigenSystem& system) {
  return system.eigenvectors * system.eigenvalues.cast<Complex>().asDiagonal() *
         system.eigenvectors.adjoint();
}

Complex expectation(const Operator& a, const DensityMatrix& w) {
  if (a.dim() != w.dim()) throw Error(Errc::DimensionMismatch, "operator and state dimensions differ");
  // tr(AW) = Σ_ij A_ij W_ji
  return a.entries().cwiseProduct(w.entries().transpose()).sum();
}

nlohmann::json matrix_to_json(const CMatrix& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) entries.push_back({m(i, j).real(), m(i, j).imag()});
  }
  return {{"dim", m.rows()}, {"entries", std::move(entries)}};
}

CMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("entries")) {
    throw Error(Errc::ConfigError, "matrix JSON needs 'dim' and 'entries'");
  }
  const auto dim = j.at("dim").get<Index>();
  const auto& entries = j.at("entries");
  if (dim < 1 || !entries.is_array() || static_cast<Index>(entries.size()) != dim * dim) {
    throw Error(Errc::ConfigError, "matrix JSON entries must hold dim² [re, im] pairs");
  }
  CMatrix m(dim, dim);
  for (Index k = 0; k < dim * dim; ++k) {
    const auto& z = entries[static_cast<std::size_t>(k)];
    if (!z.is_array() || z.size() != 2) throw Error(Errc::ConfigError, "matrix entry must be [re, im]");
    m(k / dim, k % dim) = Complex(z[0].get<double>(), z[1].get<double>());
  }
  return m;
}

nlohmann::json vector_to_json(const CVector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back({v[i].real(), v[i].imag()});
  return out;
}

CVector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw Error(Errc::ConfigError, "vector JSON must be a non-empty array");
  CVector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& z = j[i];
    if (z.is_number()) {
      v[static_cast<Index>(i)] = z.get<double>();
    } else if (z.is_array() && z.size() == 2) {
      v[static_cast<Index>(i)] = Complex(z[0].get<double>(), z[1].get<double>());
    } else {
      throw Error(Errc::ConfigError, "vector entry must be a number or [re, im]");
    }
  }
  return v;
}

}  // namespace dmsim
