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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "dmsim/hilbert.hpp"
#include "dmsim/model.hpp"

namespace dmsim {

enum class ExperimentKind { Evolve, Bohm, Grw, Entropy, Equiv, Iph };

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);
std::string to_string(ExperimentKind kind);

/// Experiment-level thresholds; every field can be overridden from the
/// config's "tolerances" block.
struct Thresholds {
  double tv_threshold = 0.05;
  double alpha = 0.01;
  double assignment_delta = 0.1;
  double occupation_band = 0.15;
  double count_tolerance = 0.05;

  static Thresholds from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct ExperimentConfig {
  ModelDescriptor model;
  ExperimentKind kind;
  nlohmann::json params;  // the "experiment" block
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  Thresholds thresholds;
  nlohmann::json raw;

  /// Validates the document before anything is built. Throws ConfigError.
  static ExperimentConfig parse(const nlohmann::json& document, ExperimentKind expected);
};

/// JSON Schema describing the config document.
const std::string& config_schema();

/// Builds an initial state from a state spec. Pure specs yield PureState,
/// ensemble and mixture specs yield DensityMatrix.
QuantumState build_state(const nlohmann::json& spec, const LatticeModel& model);
PureState build_pure_state(const nlohmann::json& spec, const LatticeModel& model);
DensityMatrix build_density(const nlohmann::json& spec, const LatticeModel& model);

/// Subspace spec: macrospace cell, explicit basis indices or vectors, energy
/// shell, or the full space.
Subspace build_subspace(const nlohmann::json& spec, const LatticeModel& model);

}  // namespace dmsim
