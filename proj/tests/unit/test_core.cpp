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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <thread>
#include <vector>

#include "doctest.h"
#include "dmsim/errors.hpp"
#include "dmsim/hilbert.hpp"
#include "dmsim/propagator_cache.hpp"
#include "dmsim/rng.hpp"
#include "dmsim/stats.hpp"
#include "oracles.hpp"

using namespace dmsim;

namespace {

template <class F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::NumericalFault;
}

template <class F>
double error_measure(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.measured();
  }
  FAIL("expected an error");
  return 0.0;
}

CMatrix diag(std::initializer_list<double> values) {
  CMatrix m = CMatrix::Zero(static_cast<Index>(values.size()), static_cast<Index>(values.size()));
  Index i = 0;
  for (double v : values) {
    m(i, i) = v;
    ++i;
  }
  return m;
}

CVector unit(Index d, Index k) {
  CVector v = CVector::Zero(d);
  v[k] = 1.0;
  return v;
}

}  // namespace

TEST_SUITE("rng") {
  TEST_CASE("philox matches the published known-answer vectors") {
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  }

  TEST_CASE("streams are reproducible and mutually distinct") {
    RngStream a(42, Stream::Trajectory, 7), b(42, Stream::Trajectory, 7);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    std::set<std::uint64_t> firsts;
    for (auto s : {Stream::Trajectory, Stream::InitialSample, Stream::CollapseSchedule, Stream::CollapseCenter}) {
      for (std::uint64_t idx : {0ull, 1ull, 1ull << 40}) {
        for (std::uint64_t seed : {0ull, 1ull}) firsts.insert(RngStream(seed, s, idx).next_u64());
      }
    }
    CHECK(firsts.size() == 4 * 3 * 2);
  }

  TEST_CASE("uniform, below and normal have the right ranges and moments") {
    RngStream r(1, Stream::Pipeline, 0);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = r.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      REQUIRE(r.below(5) < 5u);
      const double z = r.normal();
      sum += z;
      sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
  }

  TEST_CASE("exponential draws pass a KS test against the exponential law") {
    RngStream r(9, Stream::CollapseSchedule, 3);
    std::vector<double> x(20000);
    for (double& v : x) v = r.exponential(0.2);
    const auto ks = ks_one_sample(x, [](double t) { return 1.0 - std::exp(-0.2 * t); });
    CHECK(ks.p_value > 0.01);
  }
}

TEST_SUITE("core-hilbert") {
  TEST_CASE("make_density accepts the maximally mixed qubit") {
    const DensityMatrix w = make_density(diag({0.5, 0.5}));
    CHECK(w.purity() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w.dim() == 2);
  }

  TEST_CASE("make_density names the violated invariant and its size") {
    CHECK(error_code([] { make_density(diag({0.5, 0.4})); }) == Errc::TraceNotOne);
    CHECK(error_measure([] { make_density(diag({0.5, 0.4})); }) == doctest::Approx(0.9));
    CHECK(error_code([] { make_density(diag({1.1, -0.1})); }) == Errc::NotPositive);
    CHECK(error_measure([] { make_density(diag({1.1, -0.1})); }) == doctest::Approx(-0.1));
    CMatrix nh = diag({0.5, 0.5});
    nh(0, 1) = 0.1;
    CHECK(error_code([&] { make_density(nh); }) == Errc::NotHermitian);
    CHECK(error_code([] { make_density(CMatrix::Zero(2, 3)); }) == Errc::NotSquare);
  }

  TEST_CASE("tiny negative eigenvalues are clipped and the trace renormalized") {
    const DensityMatrix w = make_density(diag({1.0 + 5e-11, -5e-11}));
    CHECK(w.min_eigenvalue() >= 0.0);
    CHECK(std::abs(w.entries().trace().real() - 1.0) < 1e-14);
  }

  TEST_CASE("pure states validate their norm") {
    CHECK(error_code([] { PureState(CVector::Ones(2)); }) == Errc::NotNormalized);
    const PureState psi = PureState::normalized(CVector::Ones(4));
    CHECK(psi.density().purity() == doctest::Approx(1.0));
  }

  TEST_CASE("coordinate projector") {
    const std::vector<CVector> basis{unit(4, 0), unit(4, 1)};
    const Operator p = projector_onto(basis, 4);
    CHECK(max_abs(p.entries() - diag({1, 1, 0, 0})) < 1e-15);
    CHECK(p.is_hermitian());
  }

  TEST_CASE("projector errors") {
    CHECK(error_code([] { projector_onto(std::vector<CVector>{}, 4); }) == Errc::EmptyBasis);
    CVector skew = (unit(4, 0) + unit(4, 1)) / std::sqrt(2.0);
    CHECK(error_code([&] { projector_onto(std::vector<CVector>{unit(4, 0), skew}, 4); }) == Errc::NotOrthonormal);
    CHECK(error_measure([&] { projector_onto(std::vector<CVector>{unit(4, 0), skew}, 4); }) ==
          doctest::Approx(1.0 / std::sqrt(2.0)));
  }

  TEST_CASE("property: random projectors are idempotent with integer trace") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 50; ++trial) {
      const Index d = 2 + static_cast<Index>(gen() % 30);
      const Index r = 1 + static_cast<Index>(gen() % static_cast<std::uint64_t>(d));
      CMatrix a(d, r);
      for (Index i = 0; i < d; ++i) {
        for (Index j = 0; j < r; ++j) a(i, j) = oracle::gaussian_complex(gen);
      }
      const CMatrix q = Eigen::HouseholderQR<CMatrix>(a).householderQ() * CMatrix::Identity(d, r);
      const Operator p = projector_onto(q);
      const CMatrix& m = p.entries();
      CHECK(max_abs(m * m - m) < 1e-10);
      CHECK(hermiticity_deviation(m) < 1e-12);
      CHECK(std::abs(m.trace().real() - static_cast<double>(r)) < 1e-9);
    }
  }

  TEST_CASE("partial trace over spin") {
    std::mt19937_64 gen(5);
    const CMatrix ws = oracle::random_density(3, gen);
    const CMatrix half_identity = CMatrix::Identity(2, 2) / 2.0;
    CMatrix product(6, 6);
    for (Index a = 0; a < 3; ++a) {
      for (Index b = 0; b < 3; ++b) product.block(2 * a, 2 * b, 2, 2) = ws(a, b) * half_identity;
    }
    CHECK(max_abs(partial_trace_spin(make_density(product), 3, 2).entries() - ws) < 1e-12);

    const DensityMatrix w = make_density(oracle::random_density(5, gen));
    CHECK(max_abs(partial_trace_spin(w, 5, 1).entries() - w.entries()) < 1e-15);

    // (|0,↑⟩ + |1,↓⟩)/√2 on 2 sites × spin 2: index = site·2 + spin.
    CVector bell = CVector::Zero(4);
    bell[0] = bell[3] = 1.0 / std::sqrt(2.0);
    const DensityMatrix reduced = partial_trace_spin(PureState(bell).density(), 2, 2);
    CHECK(reduced.purity() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(error_code([&] { partial_trace_spin(w, 2, 2); }) == Errc::DimensionMismatch);
  }

  TEST_CASE("property: partial trace commutes with convex mixtures") {
    std::mt19937_64 gen(6);
    for (int trial = 0; trial < 20; ++trial) {
      const CMatrix w1 = oracle::random_density(12, gen), w2 = oracle::random_density(12, gen);
      const double a = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
      const CMatrix lhs = partial_trace_spin(make_density(a * w1 + (1.0 - a) * w2), 4, 3).entries();
      const CMatrix rhs = a * partial_trace_spin(make_density(w1), 4, 3).entries() +
                          (1.0 - a) * partial_trace_spin(make_density(w2), 4, 3).entries();
      CHECK(max_abs(lhs - rhs) < 1e-10);
    }
  }

  TEST_CASE("spectral decomposition") {
    const EigenSystem id = spectral_decompose(Operator::hermitian(CMatrix::Identity(5, 5)));
    for (Index i = 0; i < 5; ++i) CHECK(id.eigenvalues[i] == doctest::Approx(1.0));
    CMatrix nh = CMatrix::Zero(2, 2);
    nh(0, 1) = 1.0;
    CHECK(error_code([&] { spectral_decompose(Operator::general(nh)); }) == Errc::NotHermitian);
    CHECK(error_code([&] { Operator::hermitian(nh); }) == Errc::NotHermitian);
  }

  TEST_CASE("property: decompose then reconstruct is the identity (dims up to 64)") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 40; ++trial) {
      const Index d = 1 + static_cast<Index>(gen() % 64);
      const CMatrix h = oracle::random_hermitian(d, gen);
      const EigenSystem es = spectral_decompose(Operator::hermitian(h));
      CHECK(max_abs(reconstruct(es) - h) < 1e-8 * max_abs(h));
      CHECK(max_abs(es.eigenvectors.adjoint() * es.eigenvectors - CMatrix::Identity(d, d)) < 1e-8);
      for (Index i = 1; i < d; ++i) CHECK(es.eigenvalues[i - 1] <= es.eigenvalues[i]);
    }
  }

  TEST_CASE("expectation values") {
    std::mt19937_64 gen(8);
    const DensityMatrix w = make_density(oracle::random_density(4, gen));
    CHECK(std::abs(expectation(Operator::hermitian(CMatrix::Identity(4, 4)), w) - 1.0) < 1e-12);
    const Operator p = projector_onto(std::vector<CVector>{unit(4, 0), unit(4, 1)}, 4);
    CHECK(std::abs(expectation(p, make_density(diag({0.5, 0.5, 0, 0}))) - 1.0) < 1e-12);
    CHECK(std::abs(expectation(p, make_density(diag({0, 0, 0.25, 0.75})))) < 1e-12);
    CHECK(std::abs(expectation(Operator::hermitian(oracle::random_hermitian(4, gen)), w).imag()) < 1e-10);
    CHECK(error_code([&] { expectation(Operator::hermitian(CMatrix::Identity(3, 3)), w); }) ==
          Errc::DimensionMismatch);
  }

  TEST_CASE("property: purity lies in (0, 1] and equals 1 only for pure states") {
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 50; ++trial) {
      const Index d = 2 + static_cast<Index>(gen() % 20);
      const DensityMatrix mixed = make_density(oracle::random_density(d, gen));
      CHECK(mixed.purity() > 0.0);
      CHECK(mixed.purity() < 1.0 - 1e-6);
      const DensityMatrix pure = PureState(oracle::random_vector(d, gen)).density();
      CHECK(std::abs(pure.purity() - 1.0) < 1e-9);
    }
  }

  TEST_CASE("matrix JSON round trip") {
    std::mt19937_64 gen(10);
    const CMatrix m = oracle::random_hermitian(3, gen);
    const auto j = matrix_to_json(m);
    CHECK(j.at("dim") == 3);
    CHECK(j.at("entries").size() == 9);
    CHECK(max_abs(matrix_from_json(j) - m) == 0.0);
    const CVector v = oracle::random_vector(5, gen);
    CHECK((vector_from_json(vector_to_json(v)) - v).norm() == 0.0);
  }
}

TEST_SUITE("propagator-cache") {
  TEST_CASE("entries are computed once and shared") {
    PropagatorCache cache(4);
    int calls = 0;
    auto make = [&] {
      ++calls;
      return CMatrix::Identity(2, 2).eval();
    };
    const auto a = cache.get_or_compute(1, make);
    const auto b = cache.get_or_compute(1, make);
    CHECK(a.get() == b.get());
    CHECK(calls == 1);
    for (int k = 2; k <= 5; ++k) cache.get_or_compute(k, make);
    CHECK(cache.size() <= 4);
  }

  TEST_CASE("concurrent inserts for equal keys agree bitwise") {
    PropagatorCache cache(64);
    std::vector<std::shared_ptr<const CMatrix>> got(8);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
      threads.emplace_back([&, i] {
        got[static_cast<std::size_t>(i)] =
            cache.get_or_compute(3, [] { return (CMatrix::Identity(3, 3) * 2.0).eval(); });
      });
    }
    for (auto& t : threads) t.join();
    for (const auto& g : got) CHECK(max_abs(*g - *got[0]) == 0.0);
  }
}
