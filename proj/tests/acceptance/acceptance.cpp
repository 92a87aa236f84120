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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "dmsim/bohm.hpp"
#include "dmsim/dynamics.hpp"
#include "dmsim/errors.hpp"
#include "dmsim/experiments.hpp"
#include "dmsim/grw.hpp"
#include "dmsim/rng.hpp"
#include "oracles.hpp"

using namespace dmsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

LatticeModel lattice(std::vector<double> masses, int sites, Boundary boundary = Boundary::Periodic, int spin_k = 1) {
  ModelDescriptor d;
  d.masses = std::move(masses);
  d.sites = sites;
  d.spin_k = spin_k;
  d.boundary = boundary;
  return build_lattice_model(d);
}

LatticeModel m1() { return lattice({1.0}, 8); }
LatticeModel m2() { return lattice({1.0, 1.6}, 4); }

double exact_min_eigenvalue(const CMatrix& w) {
  return Eigen::SelfAdjointEigenSolver<CMatrix>(w, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

CVector random_vector(Index d, RngStream& rng) {
  CVector v(d);
  for (Index i = 0; i < d; ++i) v[i] = Complex(rng.normal(), rng.normal());
  return v;
}

// Span of r random vectors, orthonormalized by a thin QR.
Subspace random_subspace(Index d, Index r, RngStream& rng) {
  CMatrix a(d, r);
  for (Index k = 0; k < r; ++k) a.col(k) = random_vector(d, rng);
  const CMatrix q = Eigen::HouseholderQR<CMatrix>(a).householderQ() * CMatrix::Identity(d, r);
  return Subspace(q, "random");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Silences the runner's own stdout/stderr chatter while it is in scope.
class Quiet {
 public:
  Quiet() : out_(std::cout.rdbuf(sink_.rdbuf())), err_(std::cerr.rdbuf(sink_.rdbuf())) {}
  ~Quiet() {
    std::cout.rdbuf(out_);
    std::cerr.rdbuf(err_);
  }

 private:
  std::ostringstream sink_;
  std::streambuf* out_;
  std::streambuf* err_;
};

// ---------------------------------------------------------------------------

Outcome ac1_state_validity() {
  const int pipelines = 1000;
  double worst_trace = 0.0;
  double worst_eig = 1.0;
  double worst_drift = 0.0;
  for (int i = 0; i < pipelines; ++i) {
    RngStream rng(1, Stream::Pipeline, static_cast<std::uint64_t>(i));
    const int n = 1 + static_cast<int>(rng.below(2));
    const int sites = n == 1 ? 4 + static_cast<int>(rng.below(5)) : 3 + static_cast<int>(rng.below(3));
    const int spin = n == 1 ? 1 + static_cast<int>(rng.below(2)) : 1;
    std::vector<double> masses;
    for (int k = 0; k < n; ++k) masses.push_back(0.5 + 1.5 * rng.uniform());
    const auto model =
        lattice(masses, sites, rng.below(2) == 0 ? Boundary::Periodic : Boundary::HardWall, spin);
    const Index d = model.dim();

    DensityMatrix w = [&] {
      if (rng.below(2) == 0) {
        const Index rank = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(d)));
        return iph_state(random_subspace(d, rank, rng));
      }
      return ensemble_state(model, Canonical{3.0 * rng.uniform()});
    }();

    auto unitary_segment = [&](double t) {
      const double before = w.purity();
      w = evolve_density(w, model, t);
      worst_drift = std::max(worst_drift, std::abs(w.purity() - before));
    };
    unitary_segment(5.0 * rng.uniform());
    RngStream centers(1, Stream::CollapseCenter, static_cast<std::uint64_t>(i));
    const int particle = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    w = w_collapse(w, model, particle, GrwParams::simulation_defaults(model), centers).state;
    unitary_segment(5.0 * rng.uniform());

    worst_trace = std::max(worst_trace, std::abs(w.entries().trace().real() - 1.0));
    worst_eig = std::min(worst_eig, exact_min_eigenvalue(w.entries()));
  }
  const bool pass = worst_trace < 1e-7 && worst_eig > -1e-9 && worst_drift < 1e-9;
  return {pass, fmt("%d pipelines: max trace error %.2e, min eigenvalue %.2e, max purity drift %.2e", pipelines,
                    worst_trace, worst_eig, worst_drift)};
}

Outcome ac2_pure_reduction() {
  const auto model = m1();
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    RngStream rng(2, Stream::Pipeline, static_cast<std::uint64_t>(i));
    const PureState psi = PureState::normalized(random_vector(model.dim(), rng));
    const DensityMatrix w = psi.density();
    for (int site = 0; site < model.sites(); ++site) {
      const Configuration q{{model.site_center(site)}};
      const auto vw = w_velocity(w, model, q);
      const auto vp = psi_velocity(psi, model, q);
      worst = std::max(worst, std::abs(vw[0] - vp[0]));
    }
  }
  return {worst < 1e-10, fmt("100 states x 8 grid points: max |v_W - v_psi| = %.2e", worst)};
}

Outcome ac3_equivariance() {
  const auto model = m1();
  const auto pw = [&](int k) {
    return build_pure_state(json{{"type", "plane_wave"}, {"k", {k}}}, model).density().entries();
  };
  const DensityMatrix w0 = make_density(0.5 * pw(1) + 0.5 * pw(0));
  const std::vector<double> checkpoints{0.0, 2.0, 4.0};
  const auto report = equivariance_test(model, w0, 10000, Schedule{0.0, 4.0, 400}, checkpoints, 20260101);
  double worst = 0.0;
  std::string tvs;
  for (const auto& c : report.checkpoints) {
    worst = std::max(worst, c.tv_distance);
    tvs += fmt(" t=%g:%.4f", c.t, c.tv_distance);
  }
  return {worst <= 0.05 && report.checkpoints.size() == 3, "M=10000, TV" + tvs + " (limit 0.05)"};
}

Outcome ac4_equivalence() {
  const auto model = m1();
  auto component = [&](double weight, json spec) { return MixtureComponent{weight, build_pure_state(spec, model)}; };
  const Schedule schedule{0.0, 4.0, 400};
  const std::vector<double> checkpoints{0.0, 2.0, 4.0};

  const std::vector<MixtureComponent> waves{component(0.5, {{"type", "plane_wave"}, {"k", {1}}}),
                                            component(0.5, {{"type", "plane_wave"}, {"k", {0}}})};
  const auto a = equivalence_experiment(model, waves, schedule, checkpoints, 10000, 7);

  // Plane waves have a flat position density for any weights, so the power
  // check needs localized components.
  const json left{{"type", "gaussian_packet"}, {"centers", {2.0}}, {"widths", {1.0}}, {"k", {1}}};
  const json right{{"type", "gaussian_packet"}, {"centers", {6.0}}, {"widths", {1.0}}, {"k", {0}}};
  const std::vector<MixtureComponent> packets{component(0.5, left), component(0.5, right)};
  const auto b = equivalence_experiment(model, packets, schedule, checkpoints, 10000, 11, 0.01,
                                        std::vector<double>{0.9, 0.1});

  double min_p = 1.0;
  for (const auto* r : {&a, &b}) {
    for (const auto& c : r->checkpoints) min_p = std::min(min_p, c.report.p_value);
  }
  const bool detected = b.power_check && b.power_check->detected;
  const bool pass = a.arms_agree() && b.arms_agree() && detected;
  return {pass, fmt("min KS p over 6 checkpoints %.3f (alpha 0.01); corrupted arm p = %.2e, %s", min_p,
                    b.power_check ? b.power_check->report.p_value : 1.0, detected ? "rejected" : "NOT rejected")};
}

Outcome ac5_von_neumann() {
  const double h = 1e-3;
  double worst = 0.0;
  const std::vector<LatticeModel> models{m1(), m2(), lattice({1.0}, 4, Boundary::HardWall, 2)};
  int trial = 0;
  for (const auto& model : models) {
    for (int i = 0; i < 10; ++i, ++trial) {
      RngStream rng(5, Stream::Pipeline, static_cast<std::uint64_t>(trial));
      const Index d = model.dim();
      CMatrix a(d, d);
      for (Index c = 0; c < d; ++c) a.col(c) = random_vector(d, rng);
      const CMatrix m = a * a.adjoint();
      const DensityMatrix w0 = make_density(m / m.trace().real());
      const double t = 3.0 * rng.uniform() + h;
      const CMatrix fd =
          (evolve_density(w0, model, t + h).entries() - evolve_density(w0, model, t - h).entries()) / (2.0 * h);
      worst = std::max(worst, max_abs(fd - von_neumann_rhs(model, evolve_density(w0, model, t))));
    }
  }
  return {worst < 1e-4, fmt("%d random states on 3 models, h = 1e-3: max residual %.2e (limit 1e-4)", trial, worst)};
}

Outcome ac6_grw() {
  const auto model = m1();
  const GrwParams params = GrwParams::simulation_defaults(model);
  const DensityMatrix uniform = make_density(CMatrix::Identity(8, 8) / 8.0);

  const double horizon = 50.0;
  const std::vector<double> marks{horizon};
  double flashes = 0.0;
  for (int r = 0; r < 1000; ++r) {
    flashes += static_cast<double>(run_grw(model, uniform, params, horizon, marks, 61, static_cast<std::uint64_t>(r)).flashes.size());
  }
  const double expected = model.particles() * params.lambda * horizon;
  const double mean = flashes / 1000.0;
  const bool count_ok = std::abs(mean - expected) <= 0.05 * expected;

  auto center_test = [&](const DensityMatrix& w, std::uint64_t index) {
    const auto weights = collapse_center_weights(w, model, 0, params);
    std::vector<double> counts(weights.size(), 0.0);
    RngStream rng(62, Stream::CollapseCenter, index);
    for (int i = 0; i < 100000; ++i) {
      counts[static_cast<std::size_t>(model.cell_of(w_collapse(w, model, 0, params, rng).flash.center))] += 1.0;
    }
    return chi_square(counts, weights).p_value;
  };
  const DensityMatrix peaked =
      build_pure_state(json{{"type", "gaussian_packet"}, {"centers", {2.0}}, {"widths", {0.8}}, {"k", {0}}}, model)
          .density();
  const double p_uniform = center_test(uniform, 0);
  const double p_peaked = center_test(peaked, 1);

  double worst_identity = 0.0;
  const std::vector<LatticeModel> models{m1(), m2(), lattice({1.0, 1.0}, 3, Boundary::Periodic, 2)};
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const auto& mod = models[mi];
    for (int i = 0; i < 30; ++i) {
      RngStream rng(63, Stream::Pipeline, mi * 100 + static_cast<std::uint64_t>(i));
      const PureState psi = PureState::normalized(random_vector(mod.dim(), rng));
      const DensityMatrix w = psi.density();
      for (int k = 0; k < mod.particles(); ++k) {
        for (int site = 0; site < mod.sites(); ++site) {
          const CMatrix lambda = collapse_rate_operator(mod, k, mod.site_center(site), params).entries();
          const double from_w = (w.entries() * lambda).trace().real();
          const double from_psi =
              (lambda.diagonal().cwiseSqrt().cwiseProduct(psi.amplitudes())).squaredNorm();
          worst_identity = std::max(worst_identity, std::abs(from_w - from_psi));
        }
      }
    }
  }
  const bool pass = count_ok && p_uniform >= 0.01 && p_peaked >= 0.01 && worst_identity < 1e-12;
  return {pass, fmt("mean flashes %.3f vs N*lambda*T = %.1f; chi-square p uniform %.3f, peaked %.3f; "
                    "centre-density identity %.1e",
                    mean, expected, p_uniform, p_peaked, worst_identity)};
}

Outcome ac7_iph() {
  double worst_square = 0.0;
  double worst_purity = 0.0;
  for (int i = 0; i < 100; ++i) {
    RngStream rng(7, Stream::Pipeline, static_cast<std::uint64_t>(i));
    const Index d = 2 + static_cast<Index>(rng.below(39));
    const Index r = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(d)));
    const DensityMatrix w = iph_state(random_subspace(d, r, rng));
    worst_square = std::max(worst_square, max_abs(w.entries() * w.entries() - w.entries() / static_cast<double>(r)));
    worst_purity = std::max(worst_purity, std::abs(w.purity() - 1.0 / static_cast<double>(r)));
  }
  double worst_mc = 0.0;
  for (const auto& model : {m1(), m2()}) {
    const Index d = model.dim();
    const auto& e = model.eigensystem().eigenvalues;
    const double lo = e.minCoeff();
    const double hi = e.maxCoeff();
    // The shell [E, E + width] is chosen to hold the whole spectrum.
    const DensityMatrix full = iph_state(Subspace(CMatrix::Identity(d, d), "full"));
    const DensityMatrix mc = ensemble_state(model, Microcanonical{lo - 0.5, hi - lo + 1.0});
    worst_mc = std::max(worst_mc, max_abs(full.entries() - mc.entries()));
  }
  const bool pass = worst_square < 1e-10 && worst_purity < 1e-10 && worst_mc < 1e-12;
  return {pass, fmt("100 random subspaces: max |W^2 - W/dim| %.1e, purity error %.1e; full IPH vs microcanonical %.1e",
                    worst_square, worst_purity, worst_mc)};
}

Outcome ac8_entropy() {
  const auto model = m2();
  const auto dec = macro_decomposition(model, Macrovariable::left_count());
  const Schedule schedule{0.0, 100.0, 1000};
  const auto curve = entropy_experiment(model, dec, 0, schedule);

  // Oracle: dense Taylor-series propagation over the same grid.
  const auto cells = oracle::left_count_cells_two_particles(4);
  CMatrix w = CMatrix::Zero(16, 16);
  for (int idx : cells[0]) w(idx, idx) = 0.25;
  const CMatrix u = oracle::unitary(oracle::kinetic_hamiltonian({1.0, 1.6}, 4, 1.0, true), schedule.dt());
  std::vector<double> p_eq;
  double worst_oracle = 0.0;
  for (int k = 0; k <= schedule.steps; ++k) {
    const auto p = oracle::coordinate_weights(w, cells);
    p_eq.push_back(p[1]);
    for (std::size_t nu = 0; nu < 3; ++nu) {
      worst_oracle = std::max(worst_oracle, std::abs(p[nu] - curve.points[static_cast<std::size_t>(k)].weights[nu]));
    }
    w = u * w * u.adjoint();
  }
  double oracle_avg = 0.0;
  for (int k = 200; k < 1000; ++k) {
    oracle_avg += 0.5 * (p_eq[static_cast<std::size_t>(k)] + p_eq[static_cast<std::size_t>(k) + 1]) / 800.0;
  }
  const double avg = curve.average_p_eq(20.0, 100.0);

  int superposed = 0;
  bool flags_ok = true;
  for (const auto& pt : curve.points) {
    const double top = *std::max_element(pt.weights.begin(), pt.weights.end());
    if (top <= 0.9) {
      ++superposed;
      flags_ok = flags_ok && !pt.assigned && !pt.entropy;
    } else {
      flags_ok = flags_ok && pt.assigned && pt.entropy.has_value();
    }
  }
  const double p_ph0 = curve.points.front().weights[0];
  const bool pass = std::abs(p_ph0 - 1.0) < 1e-12 && std::abs(avg - 0.5) <= 0.15 && std::abs(avg - oracle_avg) < 1e-9 &&
                    worst_oracle < 1e-9 && flags_ok && superposed > 0;
  return {pass, fmt("p_PH(0) = %.12f; <p_eq>[20,100] = %.4f (oracle %.4f, target 0.5 +/- 0.15); "
                    "%d superposed points flagged %s",
                    p_ph0, avg, oracle_avg, superposed, flags_ok ? "correctly" : "INCORRECTLY")};
}

Outcome ac9_determinism() {
  const fs::path root(DMSIM_SOURCE_DIR);
  const fs::path scratch = fs::temp_directory_path() /
                           ("dmsim_acceptance_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  int configs = 0;
  int files = 0;
  std::vector<std::string> mismatches;
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(root / "configs")) {
    if (entry.path().extension() == ".json") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  {
    Quiet quiet;
    for (const auto& cfg : paths) {
      const json doc = json::parse(slurp(cfg));
      const auto kind = *parse_experiment_kind(doc.at("experiment").at("type").get<std::string>());
      const fs::path a = scratch / (cfg.stem().string() + "_a");
      const fs::path b = scratch / (cfg.stem().string() + "_b");
      const int ra = run_experiment({kind, cfg, a, std::nullopt});
      const int rb = run_experiment({kind, cfg, b, std::nullopt});
      ++configs;
      if (ra != kExitPass || rb != kExitPass) {
        mismatches.push_back(cfg.filename().string() + " (exit " + std::to_string(ra) + ")");
        continue;
      }
      for (const auto& f : fs::directory_iterator(a)) {
        ++files;
        if (slurp(f.path()) != slurp(b / f.path().filename())) mismatches.push_back(f.path().filename().string());
      }
    }
    const fs::path golden = root / "tests" / "golden" / "m1_equivariance";
    const fs::path out = scratch / "golden";
    if (run_experiment({ExperimentKind::Bohm, golden / "config.json", out, std::nullopt}) != kExitPass) {
      mismatches.push_back("golden run");
    } else {
      for (const char* f : {"manifest.json", "equivariance_report.json"}) {
        ++files;
        if (slurp(out / f) != slurp(golden / f)) mismatches.push_back(std::string("golden ") + f);
      }
    }
  }
  std::error_code ec;
  fs::remove_all(scratch, ec);
  std::string detail = fmt("%d configs run twice plus golden M1 equivariance, %d files compared", configs, files);
  for (const auto& m : mismatches) detail += "; differs: " + m;
  return {mismatches.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1", ac1_state_validity}, {"AC2", ac2_pure_reduction}, {"AC3", ac3_equivariance},
      {"AC4", ac4_equivalence},    {"AC5", ac5_von_neumann},    {"AC6", ac6_grw},
      {"AC7", ac7_iph},            {"AC8", ac8_entropy},        {"AC9", ac9_determinism},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.pass) ++failures;
    std::cout << name << ' ' << (outcome.pass ? "PASS" : "FAIL") << "  " << outcome.detail
              << fmt("  [%.1fs]", seconds) << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
