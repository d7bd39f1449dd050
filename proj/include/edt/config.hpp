#pragma once

#include <functional>

namespace edt {

// Numerical knobs shared by the frame solvers. Defaults are the pinned values;
// scenario files may override them under the "solver" key.
struct SolverConfig {
  double tol_gamma = 1e-6;     // absolute tolerance of the bisection on gamma
  double golden_rel_tol = 1e-9; // relative x tolerance of golden-section searches
  double power_tol = 1e-9;     // absolute tolerance of power bisections, W
  double quad_rel_tol = 1e-6;  // relative refinement target of the fading quadrature
  double quad_abs_tol = 1e-10; // absolute refinement floor (distortion units)
  double tail_survival = 1e-6; // survival mass at which the fading integral is truncated
  int tau_grid_points = 2048;  // log-spaced slot-length scan grid
};

// Knobs of the lifetime energy planner.
struct PlannerConfig {
  int envelope_samples = 64;      // log-spaced samples per per-frame cost envelope
  double conv_tol = 1e-5;         // relative d_mean change declaring convergence
  int max_sweeps = 200;           // hard cap on alternate-optimization sweeps
  double flat_tol = 5e-6;         // cost flatness threshold defining e_upper
  double saturation_frac = 0.999; // sum(tau) above this fraction of T flags saturation
  long n_cap = 1000000;           // safety cap on the lifetime sweep
  double slice_e_tol = 1e-7;      // relative energy tolerance of the envelope bisections
  int redistribution_retries = 2; // fresh random draws allowed after a non-descending sweep
  // Value of one frame of lifetime in the tradeoff objective
  // sigma*d_mean - (1-sigma)*lifetime_value(n); identity when unset.
  std::function<double(long)> lifetime_value;
};

struct AdmissionConfig {
  double weight_base = 2.0; // dismissal weight = base^rank, rank 0 = highest priority
};

}  // namespace edt
