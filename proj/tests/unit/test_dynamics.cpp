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

#include <cmath>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "doctest.h"
#include "dmsim/dynamics.hpp"
#include "dmsim/errors.hpp"
#include "dmsim/model.hpp"
#include "oracles.hpp"

using namespace dmsim;

namespace {

LatticeModel lattice(std::vector<double> masses, int sites, Boundary boundary = Boundary::Periodic) {
  ModelDescriptor d;
  d.masses = std::move(masses);
  d.sites = sites;
  d.boundary = boundary;
  return build_lattice_model(d);
}

LatticeModel two_level(double omega) {
  CMatrix h = CMatrix::Zero(2, 2);
  h(1, 1) = omega;
  return lattice({1.0}, 2).with_hamiltonian(Operator::hermitian(h));
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("propagator basics") {
    const LatticeModel model = lattice({1.0}, 8);
    CHECK(max_abs(propagator(model, 0.0).matrix() - CMatrix::Identity(8, 8)) < 1e-12);
    for (double t : {0.37, 2.0, 13.5, -4.0}) {
      const CMatrix& u = propagator(model, t).matrix();
      CHECK(max_abs(u.adjoint() * u - CMatrix::Identity(8, 8)) < 1e-9);
      CHECK(max_abs(u - oracle::unitary(model.hamiltonian().entries(), t)) < 1e-10);
    }
  }

  TEST_CASE("two-level closed form") {
    const double omega = 1.3;
    const LatticeModel model = two_level(omega);
    const CMatrix& u = propagator(model, 2.0 * std::numbers::pi / omega).matrix();
    CHECK(max_abs(u - CMatrix::Identity(2, 2)) < 1e-8);
    CVector plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    for (double t : {0.5, 1.7, 4.0}) {
      const DensityMatrix w = evolve_density(PureState(plus).density(), model, t);
      CHECK(std::abs(w(1, 0) - 0.5 * std::polar(1.0, -omega * t)) < 1e-10);
    }
  }

  TEST_CASE("cached propagators are shared and thread-safe") {
    const LatticeModel model = lattice({1.0, 1.0}, 4);
    const auto a = propagator(model, 1.25);
    const auto b = propagator(model, 1.25 + 1e-12);
    CHECK(a.unitary.get() == b.unitary.get());
    std::vector<CMatrix> got(8);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
      threads.emplace_back([&, i] { got[static_cast<std::size_t>(i)] = propagator(model, 0.1 * (i % 3)).matrix(); });
    }
    for (auto& th : threads) th.join();
    for (int i = 0; i < 8; ++i) CHECK(max_abs(got[static_cast<std::size_t>(i)] - propagator(model, 0.1 * (i % 3)).matrix()) == 0.0);
  }

  TEST_CASE("commuting states are stationary") {
    const LatticeModel model = lattice({1.0}, 8);
    const DensityMatrix w0 = make_density(CMatrix::Identity(8, 8) / 8.0);
    for (double t : {1.0, 10.0}) CHECK(max_abs(evolve_density(w0, model, t).entries() - w0.entries()) < 1e-14);
  }

  TEST_CASE("property: unitary invariants of density evolution") {
    std::mt19937_64 gen(21);
    const LatticeModel model = lattice({1.0, 1.6}, 4);
    const CMatrix& h = model.hamiltonian().entries();
    for (int trial = 0; trial < 10; ++trial) {
      const DensityMatrix w0 = make_density(oracle::random_density(16, gen, 3));
      const double t1 = std::uniform_real_distribution<double>(0.0, 5.0)(gen);
      const double t2 = std::uniform_real_distribution<double>(0.0, 5.0)(gen);
      const DensityMatrix w1 = evolve_density(w0, model, t1);
      CHECK(std::abs(w1.purity() - w0.purity()) < 1e-10);
      CHECK(std::abs((h * w1.entries()).trace().real() - (h * w0.entries()).trace().real()) < 1e-9);
      const DensityMatrix direct = evolve_density(w0, model, t1 + t2);
      const DensityMatrix composed = evolve_density(w1, model, t2);
      CHECK(max_abs(direct.entries() - composed.entries()) < 1e-9);
      const CMatrix u = oracle::unitary(h, t1);
      CHECK(max_abs(w1.entries() - u * w0.entries() * u.adjoint()) < 1e-10);

      const PureState psi0(oracle::random_vector(16, gen));
      const PureState psi = evolve_pure(psi0, model, t1);
      CHECK(std::abs(psi.amplitudes().norm() - 1.0) < 1e-10);
      const CMatrix outer = psi.amplitudes() * psi.amplitudes().adjoint();
      CHECK(max_abs(evolve_density(psi0.density(), model, t1).entries() - outer) < 1e-9);
    }
  }

  TEST_CASE("plane waves and eigenstates only acquire a phase") {
    const LatticeModel model = lattice({1.0}, 8);
    CVector k1(8);
    for (int q = 0; q < 8; ++q) k1[q] = std::polar(1.0 / std::sqrt(8.0), 2.0 * std::numbers::pi * q / 8.0);
    const double energy = 1.0 - std::cos(2.0 * std::numbers::pi / 8.0);
    for (double t : {0.5, 3.0, 11.0}) {
      const PureState psi = evolve_pure(PureState(k1), model, t);
      CHECK((psi.amplitudes() - std::polar(1.0, -energy * t) * k1).norm() < 1e-10);
    }
    const PureState eigen(model.eigensystem().eigenvectors.col(3));
    const DensityMatrix w0 = eigen.density();
    CHECK(max_abs(evolve_pure(eigen, model, 7.0).density().entries() - w0.entries()) < 1e-10);
  }

  TEST_CASE("von Neumann equation by central differences") {
    std::mt19937_64 gen(22);
    const LatticeModel model = lattice({1.0, 1.6}, 4);
    const double h = 1e-3;
    for (int trial = 0; trial < 5; ++trial) {
      const DensityMatrix w0 = make_density(oracle::random_density(16, gen));
      const double t = 1.0 + trial;
      const CMatrix fd = (unitary_uncached(model, t + h) * w0.entries() * unitary_uncached(model, t + h).adjoint() -
                          unitary_uncached(model, t - h) * w0.entries() * unitary_uncached(model, t - h).adjoint()) /
                         (2.0 * h);
      const DensityMatrix wt = evolve_density(w0, model, t);
      CHECK(max_abs(fd - von_neumann_rhs(model, wt)) < 1e-4);
    }
  }

  TEST_CASE("branch weights") {
    const LatticeModel model = lattice({1.0, 1.0}, 4);
    const MacroDecomposition dec = macro_decomposition(model, Macrovariable::left_count());
    const auto p0 = branch_weights(iph_state(dec[0].subspace), dec);
    CHECK(p0[0] == doctest::Approx(1.0));
    CHECK(std::abs(p0[1]) < 1e-15);

    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 10; ++trial) {
      const auto p = branch_weights(make_density(oracle::random_density(16, gen)), dec);
      double s = 0.0;
      for (double v : p) {
        CHECK(v >= -1e-10);
        s += v;
      }
      CHECK(std::abs(s - 1.0) < 1e-9);
    }

    // Regression pin at t = 5 against an independent Taylor-series propagation.
    const DensityMatrix wt = evolve_density(iph_state(dec[0].subspace), model, 5.0);
    const auto p = branch_weights(wt, dec);
    CMatrix w0 = CMatrix::Zero(16, 16);
    const auto cells = oracle::left_count_cells_two_particles(4);
    for (int idx : cells[0]) w0(idx, idx) = 0.25;
    const CMatrix u = oracle::unitary(oracle::kinetic_hamiltonian({1.0, 1.0}, 4, 1.0, true), 5.0);
    const auto expected = oracle::coordinate_weights(u * w0 * u.adjoint(), cells);
    for (std::size_t nu = 0; nu < 3; ++nu) CHECK(std::abs(p[nu] - expected[nu]) < 1e-9);
    CHECK(p[0] == doctest::Approx(0.41195).epsilon(1e-4));
    CHECK(p[1] == doctest::Approx(0.45977).epsilon(1e-4));
    CHECK(p[2] == doctest::Approx(0.12828).epsilon(1e-4));
  }

  TEST_CASE("energy-eigenbasis decompositions have constant weights") {
    const LatticeModel model = lattice({1.0, 1.6}, 4);
    const CMatrix& q = model.eigensystem().eigenvectors;
    std::vector<Macrospace> cells;
    cells.push_back({Subspace(q.leftCols(5), "low"), projector_onto(q.leftCols(5)), 0});
    cells.push_back({Subspace(q.rightCols(11), "high"), projector_onto(q.rightCols(11)), 1});
    const MacroDecomposition dec(std::move(cells), "energy");
    std::mt19937_64 gen(24);
    const DensityMatrix w0 = make_density(oracle::random_density(16, gen));
    const auto p0 = branch_weights(w0, dec);
    for (double t : {1.0, 4.0, 9.0}) {
      const auto p = branch_weights(evolve_density(w0, model, t), dec);
      CHECK(std::abs(p[0] - p0[0]) < 1e-9);
    }
  }

  TEST_CASE("mass density") {
    const LatticeModel m1 = lattice({1.0}, 8);
    CMatrix local = CMatrix::Zero(8, 8);
    local(3, 3) = 1.0;
    const auto md = mass_density(make_density(local), m1);
    for (int x = 0; x < 8; ++x) CHECK(md.values[static_cast<std::size_t>(x)] == (x == 3 ? 1.0 : 0.0));

    const LatticeModel m2 = lattice({1.0, 1.0}, 4);
    const auto uniform = mass_density(make_density(CMatrix::Identity(16, 16) / 16.0), m2);
    for (double v : uniform.values) CHECK(v == doctest::Approx(0.5));

    const LatticeModel heavy = lattice({1.0, 2.5}, 4);
    std::mt19937_64 gen(25);
    const CMatrix a = oracle::random_density(16, gen), b = oracle::random_density(16, gen);
    const auto ma = mass_density(make_density(a), heavy), mb = mass_density(make_density(b), heavy);
    const auto mix = mass_density(make_density(0.3 * a + 0.7 * b), heavy);
    double total = 0.0;
    for (std::size_t x = 0; x < 4; ++x) {
      CHECK(ma.values[x] >= -1e-10);
      CHECK(std::abs(mix.values[x] - (0.3 * ma.values[x] + 0.7 * mb.values[x])) < 1e-10);
      total += ma.values[x];
    }
    CHECK(std::abs(total - 3.5) < 1e-9);
  }

  TEST_CASE("dimension checks") {
    const LatticeModel model = lattice({1.0}, 8);
    const DensityMatrix w = make_density(CMatrix::Identity(4, 4) / 4.0);
    CHECK_THROWS_AS(evolve_density(w, model, 1.0), Error);
    CHECK_THROWS_AS(branch_weights(w, macro_decomposition(model, Macrovariable::left_count())), Error);
  }

  TEST_CASE("schedules") {
    const Schedule s = Schedule::from_json({{"t_start", 1.0}, {"t_end", 3.0}, {"steps", 4}});
    CHECK(s.dt() == doctest::Approx(0.5));
    CHECK(s.time(4) == doctest::Approx(3.0));
    CHECK(s.nearest_step(2.2) == 2);
    CHECK(Schedule::from_json(s.to_json()).to_json() == s.to_json());
    CHECK_THROWS_AS(Schedule::from_json({{"t_end", 1.0}, {"steps", 0}}), Error);
    CHECK_THROWS_AS(Schedule::from_json({{"t_end", -1.0}, {"steps", 3}}), Error);
    CHECK_THROWS_AS(Schedule::from_json({{"t_end", 1.0}, {"steps", 3}, {"dt", 0.1}}), Error);
  }
}
