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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dmsim/bohm.hpp"
#include "dmsim/config.hpp"
#include "dmsim/dynamics.hpp"
#include "dmsim/hilbert.hpp"
#include "dmsim/model.hpp"
#include "dmsim/stats.hpp"

namespace dmsim {

inline constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// W-BM versus Ψ-BM with a random wave function drawn from the mixture.

struct MixtureComponent {
  double weight;
  PureState state;
};

struct EquivalenceCheckpoint {
  double t;
  StatReport report;
};

struct PowerCheck {
  std::vector<double> corrupted_weights;
  /// Exact TV between the true and corrupted initial position diagonals.
  double exact_tv;
  StatReport report;
  /// True when the corrupted arm is rejected, i.e. the harness can tell.
  bool detected;
};

struct EquivalenceResult {
  std::vector<EquivalenceCheckpoint> checkpoints;
  std::optional<PowerCheck> power_check;
  std::size_t ensemble_size = 0;
  double alpha = 0.01;

  bool arms_agree() const;
  bool pass() const;
  nlohmann::json to_json() const;
};

/// Arm A runs W-BM on W = Σ p_i |ψ_i⟩⟨ψ_i|; arm B draws ψ_i per trajectory and
/// runs Ψ-BM. Each checkpoint compares the arms' positions with a two-sample
/// KS test (per particle marginal, Bonferroni-corrected for N > 1). With
/// corrupted weights, a third arm drawn from the wrong mixture is compared at
/// t_start and must be rejected.
EquivalenceResult equivalence_experiment(const LatticeModel& model, std::span<const MixtureComponent> mixture,
                                         const Schedule& schedule, std::span<const double> checkpoints,
                                         std::size_t ensemble_size, std::uint64_t seed, double alpha = 0.01,
                                         std::optional<std::vector<double>> corrupted_weights = std::nullopt);

// ---------------------------------------------------------------------------
// Entropy curve from the normalized projector onto the PH cell.

struct EntropyPoint {
  double t;
  std::vector<double> weights;
  std::size_t dominant;
  bool assigned;
  std::optional<double> entropy;  // only when assigned
  double p_eq;
};

struct EntropyCurve {
  std::size_t ph_cell = 0;
  std::size_t eq_cell = 0;
  std::vector<Index> cell_dims;
  double delta = 0.1;
  std::vector<EntropyPoint> points;

  /// Trapezoidal time average of p_eq over the schedule points in [from, to].
  double average_p_eq(double from, double to) const;
  nlohmann::json to_json() const;
};

EntropyCurve entropy_experiment(const LatticeModel& model, const MacroDecomposition& decomposition,
                                std::size_t ph_cell, const Schedule& schedule, double delta = 0.1);

/// Same bookkeeping for an arbitrary initial state.
EntropyCurve entropy_curve(const LatticeModel& model, const MacroDecomposition& decomposition,
                           const DensityMatrix& w0, std::size_t ph_cell, const Schedule& schedule,
                           double delta = 0.1);

/// Comparison mode for the wave-function theory: pure states drawn uniformly
/// from the unit sphere of the PH cell, each evolved exactly. Returns p_eq(t)
/// per sample (outer index: sample).
std::vector<std::vector<double>> statistical_postulate_samples(const LatticeModel& model,
                                                               const MacroDecomposition& decomposition,
                                                               std::size_t ph_cell, const Schedule& schedule,
                                                               std::size_t samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Config-driven runner.

enum ExitCode : int { kExitPass = 0, kExitStatisticalFail = 1, kExitConfigError = 2, kExitNumericalFault = 3 };

struct RunRequest {
  ExperimentKind kind;
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
};

/// In-memory artifacts of a run, keyed by relative file name.
struct RunArtifacts {
  std::vector<std::pair<std::string, std::string>> files;
  bool pass = true;
  std::string summary;
};

/// Runs an already parsed config; throws on failure.
RunArtifacts execute_experiment(const ExperimentConfig& config, std::uint64_t seed);

/// Parses, dispatches, writes artifacts plus manifest.json; returns the exit
/// code. Diagnostics go to standard error. Nothing is written unless the run
/// completes.
int run_experiment(const RunRequest& request);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace dmsim
