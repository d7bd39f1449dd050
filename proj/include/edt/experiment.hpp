#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "edt/planner.hpp"
#include "edt/scenario.hpp"

namespace edt {

// Scenario run defaults after command-line overrides.
struct ExperimentOptions {
  CsiMode mode = CsiMode::statistical;
  std::vector<double> sigmas{0.5};
  std::uint64_t seed = 42;
  std::string out_dir = ".";
  bool verbose = false;
  std::ostream* log = nullptr;  // notices and sweep traces; silent when null
};

ExperimentOptions options_from(const Scenario& sc);

struct ExperimentResult {
  bool feasible = false;
  std::string message;  // diagnostic when infeasible, else empty
  AdmissionResult admission;
  SweepResult sweep;
  std::vector<std::string> files;  // artifact paths written
};

// Admission at the scenario frame length, lifetime sweep over the admitted set,
// then tradeoff.csv, tau.csv and delta_policy.csv under opts.out_dir. Deterministic
// for a fixed (scenario, options) pair: every random draw comes from streams of
// opts.seed.
ExperimentResult run_experiment(const Scenario& sc, const ExperimentOptions& opts);

// Frame-length sweep of the admission stage alone: dismissal.csv, one row per
// frame length in sc.t_sweep (a built-in grid when the scenario gives none).
ExperimentResult sweep_dismissal(const Scenario& sc, const ExperimentOptions& opts);

// Processing-slope sweep re-running the lifetime sweep per slope: sensitivity.csv
// with one row per (slope, n). Grid from sc.alpha_sweep or a built-in default.
ExperimentResult sweep_sensitivity(const Scenario& sc, const ExperimentOptions& opts);

// One-frame inspection at explicit per-node energies, admission applied first.
struct FrameReport {
  AdmissionResult admission;
  std::vector<DeviceParams> admitted;  // devices that entered the solve
  FrameSolution solution;              // dismissed ids filled in
};

FrameReport solve_frame_report(const Scenario& sc, std::span<const double> energies,
                               CsiMode mode, std::uint64_t seed);

}  // namespace edt
