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

#include "dmsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <numbers>

#include "dmsim/dynamics.hpp"
#include "dmsim/errors.hpp"

namespace dmsim {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(Errc::ConfigError, message); }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) fail(where + " must be an object");
  for (const auto& item : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; })) {
      fail("unknown key '" + item.key() + "' in " + where);
    }
  }
}

void require(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const char* k : keys) {
    if (!j.contains(k)) fail(where + "." + k + " is required");
  }
}

double number(const json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number()) fail(where + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(where + "." + key + " must be finite");
  return x;
}

double positive(const json& j, const char* key, const std::string& where) {
  const double x = number(j, key, where);
  if (!(x > 0.0)) fail(where + "." + key + " must be positive");
  return x;
}

long long integer(const json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) fail(where + "." + key + " must be an integer");
  return v.get<long long>();
}

std::vector<double> number_array(const json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_array()) fail(where + "." + key + " must be an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) fail(where + "." + key + " must contain numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::string type_of(const json& spec, const std::string& where) {
  if (!spec.is_object() || !spec.contains("type") || !spec.at("type").is_string()) {
    fail(where + " needs a string 'type'");
  }
  return spec.at("type").get<std::string>();
}

void validate_schedule(const json& j, const std::string& where) {
  check_keys(j, {"t_start", "t_end", "steps"}, where);
  require(j, {"t_end", "steps"}, where);
  if (j.contains("t_start")) number(j, "t_start", where);
  number(j, "t_end", where);
  if (integer(j, "steps", where) < 1) fail(where + ".steps must be at least 1");
  Schedule::from_json(j);
}

void validate_checkpoints(const json& params, const std::string& where) {
  if (!params.contains("checkpoints")) return;
  const auto times = number_array(params, "checkpoints", where);
  if (times.empty()) fail(where + ".checkpoints must not be empty");
}

void validate_macrovariable(const json& j, const std::string& where) {
  check_keys(j, {"type", "cells", "left_sites"}, where);
  const std::string type = type_of(j, where);
  if (type != "left-count" && type != "custom") fail(where + ".type must be 'left-count' or 'custom'");
  if (type == "custom" && !j.contains("cells")) fail(where + ".cells is required for a custom macrovariable");
  if (j.contains("cells") && !j.at("cells").is_array()) fail(where + ".cells must be an array");
  if (j.contains("left_sites") && !j.at("left_sites").is_array()) fail(where + ".left_sites must be an array");
}

void validate_state(const json& spec, const std::string& where, bool pure_only);

void validate_subspace(const json& spec, const std::string& where) {
  check_keys(spec, {"macrospace", "basis_indices", "basis_vectors", "energy_shell", "full"}, where);
  if (spec.size() != 1) fail(where + " must have exactly one of macrospace, basis_indices, basis_vectors, energy_shell, full");
  if (spec.contains("macrospace")) {
    const auto& m = spec.at("macrospace");
    check_keys(m, {"macrovariable", "cell"}, where + ".macrospace");
    require(m, {"macrovariable", "cell"}, where + ".macrospace");
    validate_macrovariable(m.at("macrovariable"), where + ".macrospace.macrovariable");
    if (integer(m, "cell", where + ".macrospace") < 0) fail(where + ".macrospace.cell must be non-negative");
  } else if (spec.contains("basis_indices")) {
    if (!spec.at("basis_indices").is_array() || spec.at("basis_indices").empty()) {
      fail(where + ".basis_indices must be a non-empty array");
    }
  } else if (spec.contains("basis_vectors")) {
    if (!spec.at("basis_vectors").is_array() || spec.at("basis_vectors").empty()) {
      fail(where + ".basis_vectors must be a non-empty array");
    }
  } else if (spec.contains("energy_shell")) {
    const auto& e = spec.at("energy_shell");
    check_keys(e, {"energy", "width"}, where + ".energy_shell");
    require(e, {"energy", "width"}, where + ".energy_shell");
    number(e, "energy", where + ".energy_shell");
    positive(e, "width", where + ".energy_shell");
  } else if (!spec.at("full").is_boolean() || !spec.at("full").get<bool>()) {
    fail(where + ".full must be true");
  }
}

void validate_state(const json& spec, const std::string& where, bool pure_only) {
  const std::string type = type_of(spec, where);
  if (type == "basis") {
    check_keys(spec, {"type", "index"}, where);
    require(spec, {"index"}, where);
    if (integer(spec, "index", where) < 0) fail(where + ".index must be non-negative");
  } else if (type == "eigenstate") {
    check_keys(spec, {"type", "index"}, where);
    require(spec, {"index"}, where);
    if (integer(spec, "index", where) < 0) fail(where + ".index must be non-negative");
  } else if (type == "plane_wave") {
    check_keys(spec, {"type", "k", "spin"}, where);
    require(spec, {"k"}, where);
    number_array(spec, "k", where);
  } else if (type == "gaussian_packet") {
    check_keys(spec, {"type", "centers", "widths", "k", "spin"}, where);
    require(spec, {"centers", "widths"}, where);
    const auto widths = number_array(spec, "widths", where);
    if (std::any_of(widths.begin(), widths.end(), [](double w) { return !(w > 0.0); })) {
      fail(where + ".widths must be positive");
    }
    if (number_array(spec, "centers", where).size() != widths.size()) {
      fail(where + ".centers and .widths must have equal length");
    }
    if (spec.contains("k") && number_array(spec, "k", where).size() != widths.size()) {
      fail(where + ".k must have one entry per particle");
    }
  } else if (type == "amplitudes") {
    check_keys(spec, {"type", "values", "normalize"}, where);
    require(spec, {"values"}, where);
    if (!spec.at("values").is_array()) fail(where + ".values must be an array");
  } else if (pure_only) {
    fail(where + ".type '" + type + "' is not a pure-state spec");
  } else if (type == "mixture") {
    check_keys(spec, {"type", "components"}, where);
    require(spec, {"components"}, where);
    const auto& comps = spec.at("components");
    if (!comps.is_array() || comps.empty()) fail(where + ".components must be a non-empty array");
    double total = 0.0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const std::string w = where + ".components[" + std::to_string(i) + "]";
      check_keys(comps[i], {"weight", "state"}, w);
      require(comps[i], {"weight", "state"}, w);
      const double p = number(comps[i], "weight", w);
      if (p < 0.0) fail(w + ".weight must be non-negative");
      total += p;
      validate_state(comps[i].at("state"), w + ".state", true);
    }
    if (std::abs(total - 1.0) > tol::kAlgebraic) fail(where + ".components weights must sum to 1");
  } else if (type == "iph") {
    check_keys(spec, {"type", "subspace"}, where);
    require(spec, {"subspace"}, where);
    validate_subspace(spec.at("subspace"), where + ".subspace");
  } else if (type == "canonical") {
    check_keys(spec, {"type", "beta"}, where);
    require(spec, {"beta"}, where);
    if (number(spec, "beta", where) < 0.0) fail(where + ".beta must be non-negative");
  } else if (type == "microcanonical") {
    check_keys(spec, {"type", "energy", "width"}, where);
    require(spec, {"energy", "width"}, where);
    number(spec, "energy", where);
    positive(spec, "width", where);
  } else if (type == "maximally_mixed") {
    check_keys(spec, {"type"}, where);
  } else if (type == "matrix") {
    check_keys(spec, {"type", "matrix"}, where);
    require(spec, {"matrix"}, where);
  } else {
    fail(where + ".type '" + type + "' is not a known state spec");
  }
}

void validate_mixture_list(const json& params, const std::string& where) {
  const auto& comps = params.at("mixture");
  if (!comps.is_array() || comps.empty()) fail(where + ".mixture must be a non-empty array");
  double total = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string w = where + ".mixture[" + std::to_string(i) + "]";
    check_keys(comps[i], {"weight", "state"}, w);
    require(comps[i], {"weight", "state"}, w);
    const double p = number(comps[i], "weight", w);
    if (p < 0.0) fail(w + ".weight must be non-negative");
    total += p;
    validate_state(comps[i].at("state"), w + ".state", true);
  }
  if (std::abs(total - 1.0) > tol::kAlgebraic) fail(where + ".mixture weights must sum to 1");
  if (params.contains("corrupted_weights")) {
    const auto q = number_array(params, "corrupted_weights", where);
    if (q.size() != comps.size()) fail(where + ".corrupted_weights must have one entry per component");
    double s = 0.0;
    for (double x : q) {
      if (x < 0.0) fail(where + ".corrupted_weights must be non-negative");
      s += x;
    }
    if (std::abs(s - 1.0) > tol::kAlgebraic) fail(where + ".corrupted_weights must sum to 1");
  }
}

void validate_params(ExperimentKind kind, const json& p) {
  const std::string where = "experiment";
  switch (kind) {
    case ExperimentKind::Evolve:
      check_keys(p, {"type", "initial", "schedule", "macrovariable", "record_mass_density"}, where);
      require(p, {"initial", "schedule"}, where);
      validate_state(p.at("initial"), where + ".initial", false);
      validate_schedule(p.at("schedule"), where + ".schedule");
      if (p.contains("macrovariable")) validate_macrovariable(p.at("macrovariable"), where + ".macrovariable");
      break;
    case ExperimentKind::Bohm:
      check_keys(p, {"type", "initial", "schedule", "ensemble_size", "checkpoints", "keep_trajectories"}, where);
      require(p, {"initial", "schedule"}, where);
      validate_state(p.at("initial"), where + ".initial", false);
      validate_schedule(p.at("schedule"), where + ".schedule");
      validate_checkpoints(p, where);
      if (p.contains("ensemble_size") && integer(p, "ensemble_size", where) < 100) {
        fail(where + ".ensemble_size must be at least 100");
      }
      if (p.contains("keep_trajectories") && integer(p, "keep_trajectories", where) < 0) {
        fail(where + ".keep_trajectories must be non-negative");
      }
      break;
    case ExperimentKind::Grw:
      check_keys(p, {"type", "initial", "horizon", "checkpoints", "runs", "lambda", "sigma", "representation",
                     "record_mass_density"},
                 where);
      require(p, {"initial", "horizon"}, where);
      validate_state(p.at("initial"), where + ".initial", false);
      positive(p, "horizon", where);
      validate_checkpoints(p, where);
      if (p.contains("runs") && integer(p, "runs", where) < 1) fail(where + ".runs must be at least 1");
      if (p.contains("lambda")) positive(p, "lambda", where);
      if (p.contains("sigma")) positive(p, "sigma", where);
      if (p.contains("representation")) {
        const auto& r = p.at("representation");
        if (!r.is_string() || (r != "density" && r != "pure")) {
          fail(where + ".representation must be 'density' or 'pure'");
        }
      }
      break;
    case ExperimentKind::Entropy:
      check_keys(p, {"type", "macrovariable", "ph_cell", "schedule", "average_window", "target_fraction",
                     "statistical_postulate_samples"},
                 where);
      require(p, {"macrovariable", "ph_cell", "schedule"}, where);
      validate_macrovariable(p.at("macrovariable"), where + ".macrovariable");
      if (integer(p, "ph_cell", where) < 0) fail(where + ".ph_cell must be non-negative");
      validate_schedule(p.at("schedule"), where + ".schedule");
      if (p.contains("average_window")) {
        const auto w = number_array(p, "average_window", where);
        if (w.size() != 2 || !(w[0] < w[1])) fail(where + ".average_window must be [from, to] with from < to");
      }
      if (p.contains("target_fraction")) {
        const double f = number(p, "target_fraction", where);
        if (f < 0.0 || f > 1.0) fail(where + ".target_fraction must lie in [0, 1]");
      }
      if (p.contains("statistical_postulate_samples") &&
          integer(p, "statistical_postulate_samples", where) < 1) {
        fail(where + ".statistical_postulate_samples must be at least 1");
      }
      break;
    case ExperimentKind::Equiv:
      check_keys(p, {"type", "mixture", "schedule", "checkpoints", "ensemble_size", "corrupted_weights"}, where);
      require(p, {"mixture", "schedule"}, where);
      validate_mixture_list(p, where);
      validate_schedule(p.at("schedule"), where + ".schedule");
      validate_checkpoints(p, where);
      if (p.contains("ensemble_size") && integer(p, "ensemble_size", where) < 100) {
        fail(where + ".ensemble_size must be at least 100");
      }
      break;
    case ExperimentKind::Iph:
      check_keys(p, {"type", "subspace", "schedule"}, where);
      require(p, {"subspace"}, where);
      validate_subspace(p.at("subspace"), where + ".subspace");
      if (p.contains("schedule")) validate_schedule(p.at("schedule"), where + ".schedule");
      break;
  }
}

CVector product_state(const LatticeModel& model, int spin, const std::function<Complex(int, int)>& factor) {
  const Index ns = model.spin_dim();
  if (spin < 0 || spin >= ns) throw Error(Errc::IndexOutOfRange, "spin component outside the spin space", spin);
  CVector v = CVector::Zero(model.dim());
  for (Index a = 0; a < model.spatial_dim(); ++a) {
    Complex amp{1.0, 0.0};
    for (int i = 0; i < model.particles(); ++i) amp *= factor(i, model.site_of(a, i));
    v[a * ns + spin] = amp;
  }
  return v;
}

std::vector<double> per_particle(const json& spec, const char* key, const LatticeModel& model, double fallback) {
  std::vector<double> out(static_cast<std::size_t>(model.particles()), fallback);
  if (!spec.contains(key)) return out;
  const auto values = spec.at(key).get<std::vector<double>>();
  if (values.size() != out.size()) {
    throw Error(Errc::DimensionMismatch, std::string("state spec '") + key + "' needs one entry per particle");
  }
  return values;
}

}  // namespace

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  if (name == "evolve") return ExperimentKind::Evolve;
  if (name == "bohm") return ExperimentKind::Bohm;
  if (name == "grw") return ExperimentKind::Grw;
  if (name == "entropy") return ExperimentKind::Entropy;
  if (name == "equiv") return ExperimentKind::Equiv;
  if (name == "iph") return ExperimentKind::Iph;
  return std::nullopt;
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Evolve: return "evolve";
    case ExperimentKind::Bohm: return "bohm";
    case ExperimentKind::Grw: return "grw";
    case ExperimentKind::Entropy: return "entropy";
    case ExperimentKind::Equiv: return "equiv";
    case ExperimentKind::Iph: return "iph";
  }
  return "unknown";
}

Thresholds Thresholds::from_json(const json& j) {
  check_keys(j, {"tv_threshold", "alpha", "assignment_delta", "occupation_band", "count_tolerance"}, "tolerances");
  Thresholds t;
  auto read = [&](const char* key, double& field, double hi) {
    if (!j.contains(key)) return;
    field = number(j, key, "tolerances");
    if (!(field > 0.0) || field >= hi) fail(std::string("tolerances.") + key + " out of range");
  };
  read("tv_threshold", t.tv_threshold, 1.0 + 1e-15);
  read("alpha", t.alpha, 1.0);
  read("assignment_delta", t.assignment_delta, 1.0);
  read("occupation_band", t.occupation_band, 1.0 + 1e-15);
  read("count_tolerance", t.count_tolerance, 1.0 + 1e-15);
  return t;
}

json Thresholds::to_json() const {
  return {{"tv_threshold", tv_threshold},
          {"alpha", alpha},
          {"assignment_delta", assignment_delta},
          {"occupation_band", occupation_band},
          {"count_tolerance", count_tolerance}};
}

ExperimentConfig ExperimentConfig::parse(const json& document, ExperimentKind expected) {
  check_keys(document, {"model", "experiment", "seed", "output_dir", "tolerances"}, "config");
  require(document, {"model", "experiment"}, "config");
  const auto& exp = document.at("experiment");
  const std::string type = type_of(exp, "experiment");
  const auto kind = parse_experiment_kind(type);
  if (!kind) fail("experiment.type '" + type + "' is not a known experiment");
  if (*kind != expected) {
    fail("config describes a '" + type + "' experiment but the '" + to_string(expected) + "' subcommand was used");
  }

  ExperimentConfig cfg{ModelDescriptor::from_json(document.at("model")), *kind, exp, std::nullopt,
                       std::nullopt, Thresholds{}, document};
  if (document.contains("seed")) {
    const auto& s = document.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      fail("seed must be a non-negative 64-bit integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (document.contains("output_dir")) {
    if (!document.at("output_dir").is_string()) fail("output_dir must be a string");
    cfg.output_dir = document.at("output_dir").get<std::string>();
  }
  if (document.contains("tolerances")) cfg.thresholds = Thresholds::from_json(document.at("tolerances"));
  validate_params(*kind, exp);
  return cfg;
}

QuantumState build_state(const json& spec, const LatticeModel& model) {
  const std::string type = type_of(spec, "state");
  if (type == "basis" || type == "eigenstate" || type == "plane_wave" || type == "gaussian_packet" ||
      type == "amplitudes") {
    return build_pure_state(spec, model);
  }
  return build_density(spec, model);
}

PureState build_pure_state(const json& spec, const LatticeModel& model) {
  const std::string type = type_of(spec, "state");
  const Index d = model.dim();
  if (type == "basis" || type == "eigenstate") {
    const auto index = spec.at("index").get<long long>();
    if (index < 0 || index >= d) throw Error(Errc::IndexOutOfRange, "state index outside the basis", static_cast<double>(index));
    if (type == "basis") {
      CVector v = CVector::Zero(d);
      v[index] = 1.0;
      return PureState(std::move(v));
    }
    return PureState::normalized(model.eigensystem().eigenvectors.col(index));
  }
  if (type == "plane_wave") {
    const auto k = per_particle(spec, "k", model, 0.0);
    const double two_pi = 2.0 * std::numbers::pi;
    const int L = model.sites();
    return PureState::normalized(product_state(model, spec.value("spin", 0), [&](int i, int s) {
      return std::polar(1.0, two_pi * k[static_cast<std::size_t>(i)] * s / L);
    }));
  }
  if (type == "gaussian_packet") {
    const auto centers = per_particle(spec, "centers", model, 0.0);
    const auto widths = per_particle(spec, "widths", model, 1.0);
    const auto k = per_particle(spec, "k", model, 0.0);
    const double two_pi = 2.0 * std::numbers::pi;
    const int L = model.sites();
    const double box = model.box_length();
    return PureState::normalized(product_state(model, spec.value("spin", 0), [&](int i, int s) {
      const auto p = static_cast<std::size_t>(i);
      double dx = model.site_center(s) - centers[p];
      if (model.boundary() == Boundary::Periodic) dx -= box * std::round(dx / box);
      return std::polar(std::exp(-dx * dx / (4.0 * widths[p] * widths[p])), two_pi * k[p] * s / L);
    }));
  }
  if (type == "amplitudes") {
    CVector v = vector_from_json(spec.at("values"));
    if (v.size() != d) throw Error(Errc::DimensionMismatch, "amplitude vector has wrong dimension", static_cast<double>(v.size()));
    return spec.value("normalize", false) ? PureState::normalized(std::move(v)) : PureState(std::move(v));
  }
  throw Error(Errc::ConfigError, "state type '" + type + "' is not a pure-state spec");
}

DensityMatrix build_density(const json& spec, const LatticeModel& model) {
  const std::string type = type_of(spec, "state");
  const Index d = model.dim();
  if (type == "mixture") {
    CMatrix w = CMatrix::Zero(d, d);
    for (const auto& c : spec.at("components")) {
      const PureState psi = build_pure_state(c.at("state"), model);
      w += c.at("weight").get<double>() * psi.amplitudes() * psi.amplitudes().adjoint();
    }
    return make_density(w);
  }
  if (type == "iph") return iph_state(build_subspace(spec.at("subspace"), model));
  if (type == "canonical") return ensemble_state(model, Canonical{spec.at("beta").get<double>()});
  if (type == "microcanonical") {
    return ensemble_state(model, Microcanonical{spec.at("energy").get<double>(), spec.at("width").get<double>()});
  }
  if (type == "maximally_mixed") return make_density(CMatrix::Identity(d, d) / static_cast<double>(d));
  if (type == "matrix") {
    CMatrix m = matrix_from_json(spec.at("matrix"));
    if (m.rows() != d) throw Error(Errc::DimensionMismatch, "density matrix has wrong dimension", static_cast<double>(m.rows()));
    return make_density(m);
  }
  return build_pure_state(spec, model).density();
}

Subspace build_subspace(const json& spec, const LatticeModel& model) {
  const Index d = model.dim();
  if (spec.contains("macrospace")) {
    const auto& m = spec.at("macrospace");
    const auto decomposition = macro_decomposition(model, Macrovariable::from_json(m.at("macrovariable")));
    const auto cell = m.at("cell").get<std::size_t>();
    if (cell >= decomposition.size()) {
      throw Error(Errc::IndexOutOfRange, "macrospace cell outside the decomposition", static_cast<double>(cell));
    }
    return decomposition[cell].subspace;
  }
  if (spec.contains("basis_indices")) {
    const auto indices = spec.at("basis_indices").get<std::vector<Index>>();
    return Subspace::coordinate(indices, d, "basis_indices");
  }
  if (spec.contains("basis_vectors")) {
    std::vector<CVector> vectors;
    for (const auto& v : spec.at("basis_vectors")) vectors.push_back(vector_from_json(v));
    return Subspace(vectors, d, "basis_vectors");
  }
  if (spec.contains("energy_shell")) {
    const auto& e = spec.at("energy_shell");
    return energy_shell(model, e.at("energy").get<double>(), e.at("width").get<double>());
  }
  return Subspace(CMatrix::Identity(d, d), "full");
}

const std::string& config_schema() {
  static const std::string schema = R"json({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "dmsim experiment config",
  "type": "object",
  "additionalProperties": false,
  "required": ["model", "experiment"],
  "properties": {
    "seed": {"type": "integer", "minimum": 0, "maximum": 18446744073709551615},
    "output_dir": {"type": "string"},
    "tolerances": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "tv_threshold": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "assignment_delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "occupation_band": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "count_tolerance": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}
      }
    },
    "model": {
      "type": "object",
      "additionalProperties": false,
      "required": ["particles", "sites"],
      "properties": {
        "particles": {
          "type": "array", "minItems": 1,
          "items": {"type": "object", "additionalProperties": false,
                    "properties": {"mass": {"type": "number", "exclusiveMinimum": 0}}}
        },
        "sites": {"type": "integer", "minimum": 2},
        "spacing": {"type": "number", "exclusiveMinimum": 0},
        "boundary": {"enum": ["periodic", "hard-wall"]},
        "spin_k": {"type": "integer", "minimum": 1},
        "dimension_cap": {"type": "integer", "minimum": 1},
        "potential": {
          "oneOf": [{"$ref": "#/$defs/potential_term"},
                    {"type": "array", "items": {"$ref": "#/$defs/potential_term"}}]
        }
      }
    },
    "experiment": {
      "type": "object",
      "required": ["type"],
      "oneOf": [
        {"$ref": "#/$defs/evolve"}, {"$ref": "#/$defs/bohm"}, {"$ref": "#/$defs/grw"},
        {"$ref": "#/$defs/entropy"}, {"$ref": "#/$defs/equiv"}, {"$ref": "#/$defs/iph"}
      ]
    }
  },
  "$defs": {
    "potential_term": {
      "type": "object",
      "additionalProperties": false,
      "required": ["name"],
      "properties": {
        "name": {"enum": ["zero", "harmonic", "onsite", "softened_coulomb", "softened_gravity"]},
        "params": {"type": "object"}
      }
    },
    "schedule": {
      "type": "object",
      "additionalProperties": false,
      "required": ["t_end", "steps"],
      "properties": {
        "t_start": {"type": "number"},
        "t_end": {"type": "number"},
        "steps": {"type": "integer", "minimum": 1}
      }
    },
    "checkpoints": {"type": "array", "minItems": 1, "items": {"type": "number"}},
    "macrovariable": {
      "type": "object",
      "additionalProperties": false,
      "required": ["type"],
      "properties": {
        "type": {"enum": ["left-count", "custom"]},
        "left_sites": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "cells": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0}}}
      }
    },
    "complex": {"oneOf": [{"type": "number"},
                          {"type": "array", "prefixItems": [{"type": "number"}, {"type": "number"}],
                           "minItems": 2, "maxItems": 2}]},
    "subspace": {
      "type": "object",
      "minProperties": 1, "maxProperties": 1,
      "additionalProperties": false,
      "properties": {
        "macrospace": {"type": "object", "additionalProperties": false, "required": ["macrovariable", "cell"],
                       "properties": {"macrovariable": {"$ref": "#/$defs/macrovariable"},
                                      "cell": {"type": "integer", "minimum": 0}}},
        "basis_indices": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
        "basis_vectors": {"type": "array", "minItems": 1,
                          "items": {"type": "array", "items": {"$ref": "#/$defs/complex"}}},
        "energy_shell": {"type": "object", "additionalProperties": false, "required": ["energy", "width"],
                         "properties": {"energy": {"type": "number"},
                                        "width": {"type": "number", "exclusiveMinimum": 0}}},
        "full": {"const": true}
      }
    },
    "pure_state": {
      "oneOf": [
        {"type": "object", "additionalProperties": false, "required": ["type", "index"],
         "properties": {"type": {"enum": ["basis", "eigenstate"]}, "index": {"type": "integer", "minimum": 0}}},
        {"type": "object", "additionalProperties": false, "required": ["type", "k"],
         "properties": {"type": {"const": "plane_wave"}, "k": {"type": "array", "items": {"type": "number"}},
                        "spin": {"type": "integer", "minimum": 0}}},
        {"type": "object", "additionalProperties": false, "required": ["type", "centers", "widths"],
         "properties": {"type": {"const": "gaussian_packet"},
                        "centers": {"type": "array", "items": {"type": "number"}},
                        "widths": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                        "k": {"type": "array", "items": {"type": "number"}},
                        "spin": {"type": "integer", "minimum": 0}}},
        {"type": "object", "additionalProperties": false, "required": ["type", "values"],
         "properties": {"type": {"const": "amplitudes"},
                        "values": {"type": "array", "items": {"$ref": "#/$defs/complex"}},
                        "normalize": {"type": "boolean"}}}
      ]
    },
    "mixture_component": {
      "type": "object", "additionalProperties": false, "required": ["weight", "state"],
      "properties": {"weight": {"type": "number", "minimum": 0}, "state": {"$ref": "#/$defs/pure_state"}}
    },
    "state": {
      "oneOf": [
        {"$ref": "#/$defs/pure_state"},
        {"type": "object", "additionalProperties": false, "required": ["type", "components"],
         "properties": {"type": {"const": "mixture"},
                        "components": {"type": "array", "minItems": 1,
                                       "items": {"$ref": "#/$defs/mixture_component"}}}},
        {"type": "object", "additionalProperties": false, "required": ["type", "subspace"],
         "properties": {"type": {"const": "iph"}, "subspace": {"$ref": "#/$defs/subspace"}}},
        {"type": "object", "additionalProperties": false, "required": ["type", "beta"],
         "properties": {"type": {"const": "canonical"}, "beta": {"type": "number", "minimum": 0}}},
        {"type": "object", "additionalProperties": false, "required": ["type", "energy", "width"],
         "properties": {"type": {"const": "microcanonical"}, "energy": {"type": "number"},
                        "width": {"type": "number", "exclusiveMinimum": 0}}},
        {"type": "object", "additionalProperties": false, "required": ["type"],
         "properties": {"type": {"const": "maximally_mixed"}}},
        {"type": "object", "additionalProperties": false, "required": ["type", "matrix"],
         "properties": {"type": {"const": "matrix"},
                        "matrix": {"type": "object", "required": ["dim", "entries"],
                                   "properties": {"dim": {"type": "integer", "minimum": 1},
                                                  "entries": {"type": "array",
                                                              "items": {"$ref": "#/$defs/complex"}}}}}}
      ]
    },
    "evolve": {
      "type": "object", "additionalProperties": false, "required": ["type", "initial", "schedule"],
      "properties": {"type": {"const": "evolve"}, "initial": {"$ref": "#/$defs/state"},
                     "schedule": {"$ref": "#/$defs/schedule"},
                     "macrovariable": {"$ref": "#/$defs/macrovariable"},
                     "record_mass_density": {"type": "boolean"}}
    },
    "bohm": {
      "type": "object", "additionalProperties": false, "required": ["type", "initial", "schedule"],
      "properties": {"type": {"const": "bohm"}, "initial": {"$ref": "#/$defs/state"},
                     "schedule": {"$ref": "#/$defs/schedule"},
                     "checkpoints": {"$ref": "#/$defs/checkpoints"},
                     "ensemble_size": {"type": "integer", "minimum": 100},
                     "keep_trajectories": {"type": "integer", "minimum": 0}}
    },
    "grw": {
      "type": "object", "additionalProperties": false, "required": ["type", "initial", "horizon"],
      "properties": {"type": {"const": "grw"}, "initial": {"$ref": "#/$defs/state"},
                     "horizon": {"type": "number", "exclusiveMinimum": 0},
                     "checkpoints": {"$ref": "#/$defs/checkpoints"},
                     "runs": {"type": "integer", "minimum": 1},
                     "lambda": {"type": "number", "exclusiveMinimum": 0},
                     "sigma": {"type": "number", "exclusiveMinimum": 0},
                     "representation": {"enum": ["density", "pure"]},
                     "record_mass_density": {"type": "boolean"}}
    },
    "entropy": {
      "type": "object", "additionalProperties": false,
      "required": ["type", "macrovariable", "ph_cell", "schedule"],
      "properties": {"type": {"const": "entropy"}, "macrovariable": {"$ref": "#/$defs/macrovariable"},
                     "ph_cell": {"type": "integer", "minimum": 0},
                     "schedule": {"$ref": "#/$defs/schedule"},
                     "average_window": {"type": "array", "items": {"type": "number"},
                                        "minItems": 2, "maxItems": 2},
                     "target_fraction": {"type": "number", "minimum": 0, "maximum": 1},
                     "statistical_postulate_samples": {"type": "integer", "minimum": 1}}
    },
    "equiv": {
      "type": "object", "additionalProperties": false, "required": ["type", "mixture", "schedule"],
      "properties": {"type": {"const": "equiv"},
                     "mixture": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/mixture_component"}},
                     "schedule": {"$ref": "#/$defs/schedule"},
                     "checkpoints": {"$ref": "#/$defs/checkpoints"},
                     "ensemble_size": {"type": "integer", "minimum": 100},
                     "corrupted_weights": {"type": "array", "items": {"type": "number", "minimum": 0}}}
    },
    "iph": {
      "type": "object", "additionalProperties": false, "required": ["type", "subspace"],
      "properties": {"type": {"const": "iph"}, "subspace": {"$ref": "#/$defs/subspace"},
                     "schedule": {"$ref": "#/$defs/schedule"}}
    }
  }
}
)json";
  return schema;
}

}  // namespace dmsim
