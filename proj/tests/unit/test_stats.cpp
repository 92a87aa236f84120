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
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "dmsim/errors.hpp"
#include "dmsim/stats.hpp"

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

std::vector<double> uniform_draws(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& x : out) x = u(gen);
  return out;
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("total variation of identical and disjoint weights") {
  const std::vector<double> a{0.2, 0.3, 0.5, 0.0};
  const std::vector<double> b{0.0, 0.0, 0.0, 1.0};
  CHECK(total_variation(a, a) == 0.0);
  CHECK(total_variation(a, b) == doctest::Approx(1.0));
  const std::vector<double> c{0.3, 0.3, 0.4, 0.0};
  CHECK(total_variation(a, c) == doctest::Approx(0.1));
  CHECK(total_variation(a, c) == total_variation(c, a));
  const std::vector<double> shorter{0.5, 0.5};
  CHECK(error_code([&] { total_variation(a, shorter); }) == Errc::SupportMismatch);
}

TEST_CASE("Kolmogorov survival function known values") {
  CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.2700).epsilon(1e-3));
  CHECK(kolmogorov_survival(1.358) == doctest::Approx(0.05).epsilon(1e-2));
  CHECK(kolmogorov_survival(1.628) == doctest::Approx(0.01).epsilon(2e-2));
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(10.0) < 1e-80);
}

TEST_CASE("chi-square survival matches closed forms") {
  // One degree of freedom: the 95% quantile is 3.841.
  const std::vector<double> weights{0.5, 0.5};
  const double n = 1000.0;
  const double shift = std::sqrt(3.841459 * n) / 2.0;
  const std::vector<double> counts{n / 2 + shift, n / 2 - shift};
  const auto r = chi_square(counts, weights);
  CHECK(r.degrees_of_freedom == 1);
  CHECK(r.statistic == doctest::Approx(3.841459).epsilon(1e-9));
  CHECK(r.p_value == doctest::Approx(0.05).epsilon(1e-5));
  // Two degrees of freedom: survival exp(-x/2).
  const std::vector<double> w3{0.25, 0.25, 0.5};
  const std::vector<double> c3{30.0, 20.0, 50.0};
  const auto r3 = chi_square(c3, w3);
  CHECK(r3.degrees_of_freedom == 2);
  CHECK(r3.statistic == doctest::Approx(2.0));
  CHECK(r3.p_value == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("chi-square flags counts in zero-weight cells") {
  const std::vector<double> weights{0.5, 0.5, 0.0};
  const std::vector<double> counts{10.0, 10.0, 1.0};
  const auto r = chi_square(counts, weights);
  CHECK(std::isinf(r.statistic));
  CHECK(r.p_value == 0.0);
  const std::vector<double> clean{10.0, 10.0, 0.0};
  CHECK(chi_square(clean, weights).p_value == doctest::Approx(1.0));
}

TEST_CASE("KS two-sample is symmetric and accepts equal laws") {
  std::mt19937_64 gen(5);
  const auto a = uniform_draws(2000, gen);
  const auto b = uniform_draws(3000, gen);
  const auto ab = ks_two_sample(a, b);
  const auto ba = ks_two_sample(b, a);
  CHECK(ab.statistic == ba.statistic);
  CHECK(ab.p_value == ba.p_value);
  CHECK(ab.p_value > 1e-3);
  CHECK(ks_two_sample(a, a).statistic == 0.0);

  std::vector<double> shifted = b;
  for (auto& x : shifted) x += 0.1;
  CHECK(ks_two_sample(a, shifted).p_value < 1e-6);
}

TEST_CASE("KS one-sample statistic against a hand count") {
  const std::vector<double> x{0.1, 0.4, 0.7};
  const auto r = ks_one_sample(x, [](double v) { return v; });
  // Empirical steps 1/3, 2/3, 1 at 0.1, 0.4, 0.7: the widest gap is 1 - 0.7.
  CHECK(r.statistic == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("false rejection rates stay near alpha") {
  std::mt19937_64 gen(77);
  const int trials = 400;
  int ks_rejections = 0;
  int chi_rejections = 0;
  const std::vector<double> weights(10, 0.1);
  for (int t = 0; t < trials; ++t) {
    const auto a = uniform_draws(500, gen);
    const auto b = uniform_draws(500, gen);
    if (ks_two_sample(a, b).p_value < 0.05) ++ks_rejections;
    std::vector<double> counts(10, 0.0);
    for (double v : uniform_draws(1000, gen)) counts[static_cast<std::size_t>(v * 10.0)] += 1.0;
    if (chi_square(counts, weights).p_value < 0.05) ++chi_rejections;
  }
  // Binomial(400, 0.05) has mean 20 and sd 4.4; KS with Stephens' correction
  // is slightly conservative.
  CHECK(ks_rejections <= 35);
  CHECK(chi_rejections >= 6);
  CHECK(chi_rejections <= 35);
}

TEST_CASE("compare_distributions dispatches on argument types") {
  const Distribution wa = Weights{{0.5, 0.5}};
  const Distribution wb = Weights{{0.6, 0.4}};
  const auto tv = compare_distributions(wa, wb, TestKind::TotalVariation, 0.05);
  CHECK(tv.kind == TestKind::TotalVariation);
  CHECK(tv.statistic == doctest::Approx(0.1));
  CHECK(std::isnan(tv.p_value));
  CHECK(!tv.pass);

  const Distribution samples = Samples{{0.2, 0.7, 1.3, 1.9}};
  const auto chi = compare_distributions(samples, wa, TestKind::ChiSquare, 0.01);
  CHECK(chi.size_a == 4);
  CHECK(chi.size_b == 2);
  CHECK(chi.statistic == doctest::Approx(0.0));
  CHECK(chi.pass);

  CHECK(error_code([&] { compare_distributions(wa, wb, TestKind::ChiSquare, 0.01); }) == Errc::InvalidArgument);
  const Distribution outside = Samples{{2.5}};
  CHECK(error_code([&] { compare_distributions(outside, wa, TestKind::ChiSquare, 0.01); }) == Errc::SupportMismatch);
  const Distribution empty = Samples{{}};
  CHECK(error_code([&] { compare_distributions(empty, samples, TestKind::KolmogorovSmirnov, 0.01); }) ==
        Errc::SupportMismatch);
}

TEST_CASE("stat report serializes") {
  const StatReport r{TestKind::KolmogorovSmirnov, 0.1, 0.5, 10, 20, 0.01, true};
  const auto j = r.to_json();
  CHECK(j.contains("statistic"));
  CHECK(j.dump().find("inf") == std::string::npos);
}

}  // TEST_SUITE
