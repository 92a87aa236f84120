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

#include "dmsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>

#include "dmsim/errors.hpp"

namespace dmsim {

std::string to_string(TestKind kind) {
  switch (kind) {
    case TestKind::TotalVariation: return "TV";
    case TestKind::KolmogorovSmirnov: return "KS";
    case TestKind::ChiSquare: return "chi-square";
  }
  return "unknown";
}

nlohmann::json StatReport::to_json() const {
  nlohmann::json j{{"test", to_string(kind)},   {"statistic", statistic}, {"size_a", size_a},
                   {"size_b", size_b},          {"threshold", threshold}, {"pass", pass}};
  j["p_value"] = std::isnan(p_value) ? nlohmann::json(nullptr) : nlohmann::json(p_value);
  if (std::isinf(statistic)) j["statistic"] = "inf";
  return j;
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw Error(Errc::SupportMismatch, "weight vectors differ in support");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return 0.5 * sum;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  // Alternating series; converges fast for λ away from 0.
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

// Stephens' small-sample correction for the asymptotic distribution.
double ks_p_value(double statistic, double effective_n) {
  const double root = std::sqrt(effective_n);
  return kolmogorov_survival((root + 0.12 + 0.11 / root) * statistic);
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(Errc::SupportMismatch, "KS needs non-empty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return {d, ks_p_value(d, nx * ny / (nx + ny))};
}

KsResult ks_one_sample(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw Error(Errc::SupportMismatch, "KS needs a non-empty sample");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n)};
}

ChiSquareResult chi_square(std::span<const double> counts, std::span<const double> weights) {
  if (counts.size() != weights.size() || counts.empty()) {
    throw Error(Errc::SupportMismatch, "counts and weights differ in support");
  }
  double total = 0.0, weight_sum = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    total += counts[k];
    weight_sum += weights[k];
  }
  if (!(total > 0.0) || !(weight_sum > 0.0)) throw Error(Errc::SupportMismatch, "empty sample or weights");
  double stat = 0.0;
  int cells = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double expected = total * weights[k] / weight_sum;
    if (expected <= 0.0) {
      if (counts[k] > 0.0) stat = std::numeric_limits<double>::infinity();
      continue;
    }
    ++cells;
    const double diff = counts[k] - expected;
    stat += diff * diff / expected;
  }
  const int dof = std::max(cells - 1, 1);
  double p = 0.0;
  if (std::isfinite(stat)) {
    p = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), stat));
  }
  return {stat, dof, p};
}

StatReport compare_distributions(const Distribution& a, const Distribution& b, TestKind kind, double threshold) {
  const auto* wa = std::get_if<Weights>(&a);
  const auto* wb = std::get_if<Weights>(&b);
  const auto* sa = std::get_if<Samples>(&a);
  const auto* sb = std::get_if<Samples>(&b);

  if (wa && wb) {
    if (kind != TestKind::TotalVariation) throw Error(Errc::InvalidArgument, "weights vs weights compare by TV");
    const double tv = total_variation(wa->p, wb->p);
    return {kind, tv, std::numeric_limits<double>::quiet_NaN(), wa->p.size(), wb->p.size(), threshold,
            tv <= threshold};
  }
  if (sa && sb) {
    if (kind != TestKind::KolmogorovSmirnov) throw Error(Errc::InvalidArgument, "samples vs samples compare by KS");
    const KsResult r = ks_two_sample(sa->values, sb->values);
    return {kind, r.statistic, r.p_value, sa->values.size(), sb->values.size(), threshold, r.p_value >= threshold};
  }
  if (kind != TestKind::ChiSquare) throw Error(Errc::InvalidArgument, "samples vs weights compare by chi-square");
  const Samples& samples = sa ? *sa : *sb;
  const Weights& weights = wa ? *wa : *wb;
  std::vector<double> counts(weights.p.size(), 0.0);
  for (double v : samples.values) {
    const double cell = std::floor(v);
    if (!(cell >= 0.0) || cell >= static_cast<double>(counts.size())) {
      throw Error(Errc::SupportMismatch, "sample outside the weight support", v);
    }
    counts[static_cast<std::size_t>(cell)] += 1.0;
  }
  const ChiSquareResult r = chi_square(counts, weights.p);
  const std::size_t n_samples = samples.values.size();
  const std::size_t n_weights = weights.p.size();
  return {kind, r.statistic, r.p_value, sa ? n_samples : n_weights, sa ? n_weights : n_samples, threshold,
          r.p_value >= threshold};
}

}  // namespace dmsim
