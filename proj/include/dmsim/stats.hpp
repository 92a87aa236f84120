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
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace dmsim {

enum class TestKind { TotalVariation, KolmogorovSmirnov, ChiSquare };

std::string to_string(TestKind kind);

/// Exact probability weights over a finite support.
struct Weights {
  std::vector<double> p;
};

/// Draws on the real line. Against Weights they are binned by floor(value).
struct Samples {
  std::vector<double> values;
};

using Distribution = std::variant<Weights, Samples>;

struct StatReport {
  TestKind kind;
  double statistic;
  double p_value;  // NaN for total variation
  std::size_t size_a;
  std::size_t size_b;
  // Maximum distance for TV, significance level otherwise.
  double threshold;
  bool pass;

  nlohmann::json to_json() const;
};

double total_variation(std::span<const double> a, std::span<const double> b);

/// P(K > λ) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

struct KsResult {
  double statistic;
  double p_value;
};

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);
KsResult ks_one_sample(std::span<const double> samples, const std::function<double(double)>& cdf);

struct ChiSquareResult {
  double statistic;
  int degrees_of_freedom;
  double p_value;
};

/// Pearson test of binned counts against expected weights. Cells with zero
/// expected weight are excluded unless observed, which makes the statistic
/// infinite.
ChiSquareResult chi_square(std::span<const double> counts, std::span<const double> weights);

/// Dispatches on the argument types: weights/weights → TV, samples/samples →
/// two-sample KS, samples/weights → chi-square. `kind` must agree.
StatReport compare_distributions(const Distribution& a, const Distribution& b, TestKind kind, double threshold);

}  // namespace dmsim
