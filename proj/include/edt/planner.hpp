#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <list>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "edt/admission.hpp"
#include "edt/fading_solver.hpp"
#include "edt/frame_types.hpp"
#include "edt/rng.hpp"

namespace edt {

// Piecewise-linear convex non-increasing surrogate of the frame objective as a
// function of one node's per-frame energy, everyone else held fixed. Built from a
// log-spaced sample grid convexified by pool-adjacent-violators on the slopes, which
// yields exactly the greatest convex minorant of the (monotonized) samples.
struct EnvelopeSlice {
  bool feasible = false;
  std::string infeasible_reason;
  double e_lower = 0.0;     // smallest feasible energy
  double e_upper = 0.0;     // smallest energy reaching the floor value
  double floor_value = 0.0; // objective for every energy >= e_upper
  std::vector<double> ke;   // breakpoint energies, ascending; ke.front() == e_lower
  std::vector<double> kf;   // envelope values there; non-increasing, convex
  std::vector<double> sample_e;  // raw grid kept for fit diagnostics
  std::vector<double> sample_f;
  double convexification_gap = 0.0;  // max over samples of (sample - envelope)

  // Envelope value; clamps to kf.front() below e_lower and floor_value above
  // e_upper. Linear inside each segment.
  double value(double e) const;
};

// Frame objective restricted to one node's energy: the minimized worst-case
// distortion fraction, or nullopt when that energy leaves the frame infeasible.
using SliceObjective = std::function<std::optional<double>(double)>;

// Bisects the feasibility edge e_lower and the flatness edge e_upper (objective
// within cfg.flat_tol of its large-energy floor), samples cfg.envelope_samples
// points log-spaced over [e_lower, e_upper], and fits the convex envelope.
// The objective must be non-increasing in energy; e_cap bounds the search (a node
// can never spend more than its whole battery in one frame).
EnvelopeSlice build_slice(const SliceObjective& objective, double e_cap,
                          const PlannerConfig& cfg);

// One frame's surrogate as seen by the water-filling step: the stored slice,
// optionally flattened at `cut` (the best objective the rest of the network allows
// in that frame; energy that only improves this node below the cut buys nothing).
struct FrameSliceRef {
  const EnvelopeSlice* slice = nullptr;
  double cut = -std::numeric_limits<double>::infinity();
};

struct WaterFillResult {
  bool feasible = false;
  std::string infeasible_reason;
  Eigen::VectorXd energy;        // per frame
  double lambda = 0.0;           // dual level: -slope of the marginal segment
  std::vector<std::uint8_t> at_upper;  // frames filled to their effective e_upper
};

// Exact water-filling with per-frame minimum and maximum levels over piecewise
// linear envelopes: segments are filled in slope order (steepest first), slope ties
// filled proportionally, so identical frames always receive identical energy.
// Total spend is min(budget, sum of effective e_upper).
WaterFillResult water_fill(std::span<const FrameSliceRef> frames, double budget);

// What the planner records per evaluated frame column.
struct FrameEval {
  bool feasible = false;
  double gamma = std::numeric_limits<double>::infinity();
  double tau_total = 0.0;
  bool saturated = false;     // tau_total > saturation_frac * t_frame
  std::vector<double> taus;   // per-node slots at the recorded level
};

// Mode-dispatching, memoizing frame evaluator shared by the whole lifetime sweep.
// Frames fall into classes (one per distinct payload multiplier in the zeta
// pattern); per-class per-node "iso" slices (node alone, whole frame available) are
// built once and reused, and exact frame evaluations are memoized keyed by the
// energy column clamped to the iso flat levels.
class FrameModel {
 public:
  FrameModel(CsiMode mode, std::vector<DeviceParams> devices, ChannelModel channel,
             double t_frame, std::vector<double> zeta_pattern,
             std::vector<double> batteries, SolverConfig solver_cfg = {},
             PlannerConfig planner_cfg = {});

  CsiMode mode() const { return mode_; }
  int node_count() const { return static_cast<int>(devices_.size()); }
  int class_count() const { return static_cast<int>(class_zeta_.size()); }
  int class_of_frame(long k) const;
  double zeta_of_class(int c) const { return class_zeta_[c]; }
  double t_frame() const { return t_frame_; }
  double battery(int node) const { return batteries_[node]; }
  const std::vector<DeviceParams>& class_devices(int c) const { return class_devs_[c]; }
  const SolverConfig& solver_config() const { return scfg_; }
  const PlannerConfig& planner_config() const { return pcfg_; }

  // Per-frame cost of node alone in a class-c frame, whole frame duration
  // available. Built on first use; infeasible slices are cached too.
  const EnvelopeSlice& iso_slice(int c, int node);

  // Exact single-node objective at one energy (memoized). nullopt = infeasible.
  std::optional<double> iso_value_exact(int c, int node, double e);

  // Frame objective for a full energy column. Fast path: max of per-node exact
  // single-node values, certified by an exact slot-sum check; falls back to the
  // coupled minimax solve when certification fails. clamp_keys selects whether the
  // memo key (and the solve itself) may clamp energies to the iso flat levels,
  // which is only valid while frames stay decoupled.
  const FrameEval& eval(int c, const Eigen::VectorXd& energies, bool clamp_keys);

  // Full coupled solve, never the fast path, memoized separately. Used for
  // materialized schedules and their recorded per-frame values.
  const FrameEval& eval_coupled(int c, const Eigen::VectorXd& energies,
                                bool clamp_keys);

  // Complete frame solution for reporting (uncached).
  FrameSolution solve_detail(int c, const Eigen::VectorXd& energies);

  // Surrogate of the true coupled objective in one frame for one node, others
  // pinned at `energies`. Used only in rebuild (saturated) mode.
  EnvelopeSlice build_true_slice(int c, int node, const Eigen::VectorXd& energies);

  Eigen::VectorXd clamp_to_iso(int c, Eigen::VectorXd energies);

 private:
  friend struct FrameModelTestAccess;
  FrameSolution solve_column(int c, const Eigen::VectorXd& energies);
  NodeFadingPlan* plan_for(int c, int node, double e_budget);
  double node_tau_at(int c, int node, double e, double gamma);

  CsiMode mode_;
  std::vector<DeviceParams> devices_;
  ChannelModel ch_;
  double t_frame_;
  std::vector<double> batteries_;
  SolverConfig scfg_;
  PlannerConfig pcfg_;
  std::vector<double> pattern_;     // zeta value per frame position, cycled
  std::vector<int> pattern_class_;  // class index per pattern position
  std::vector<double> class_zeta_;  // distinct zeta values, first-appearance order
  std::vector<std::vector<DeviceParams>> class_devs_;  // payloads scaled per class
  std::map<std::pair<int, int>, EnvelopeSlice> iso_;
  std::map<std::tuple<int, int, std::uint64_t>, std::optional<double>> iso_exact_;
  std::map<std::pair<int, std::vector<std::uint64_t>>, FrameEval> eval_memo_;
  std::map<std::pair<int, std::vector<std::uint64_t>>, FrameEval> coupled_memo_;
  // Statistical-mode plans are ~50 KB each; LRU eviction bounds the cache. Hits
  // must refresh recency: solve_column holds pointers to one plan per node while
  // fetching the next, so anything touched less than node_count fetches ago has
  // to survive, which a recency-ordered list with cap >> N guarantees.
  using PlanKey = std::tuple<int, int, std::uint64_t>;
  std::map<PlanKey, std::pair<std::unique_ptr<NodeFadingPlan>,
                              std::list<PlanKey>::iterator>> plans_;
  std::list<PlanKey> plan_order_;  // front = coldest
  std::size_t plan_cap_ = 512;
};

// Energy allocation of every node across the n frames of one fixed lifetime.
struct EnergySchedule {
  bool feasible = false;
  std::string infeasible_reason;
  long n = 0;
  Eigen::MatrixXd energy;       // node x frame, J
  double d_mean = std::numeric_limits<double>::infinity();
  Eigen::VectorXd frame_gamma;  // recorded objective per frame
  Eigen::VectorXd frame_tau;    // slot-time total per frame
  bool saturated = false;       // ran in rebuild-slices-every-sweep mode
  int sweeps = 0;
  std::vector<double> d_mean_trace;  // one entry per accepted sweep, non-increasing
};

// Alternate optimization: per node, rebuild that node's per-frame surrogates,
// water-fill its battery, then spread any unspent energy randomly (uniform simplex
// point) over the frames already at their flat level. Sweeps stop when d_mean's
// relative improvement drops below cfg.conv_tol or after cfg.max_sweeps. A sweep
// that raises the exact d_mean is retried with fresh random draws and finally
// reverted, so the recorded trace is non-increasing by construction.
EnergySchedule random_alternate(FrameModel& model, long n, Rng& rng,
                                std::ostream* trace = nullptr);

struct TradeoffRow {
  long n = 0;
  double d_mean = 0.0;
  double tau_min = 0.0;   // over frames, of the per-frame slot-time total
  double tau_mean = 0.0;
  double tau_max = 0.0;
  bool saturated = false;
  int sweeps = 0;
};

struct SweepBest {
  double sigma = 0.0;
  long n = 0;
  double objective = 0.0;
};

struct SweepResult {
  bool feasible = false;        // at least one feasible lifetime
  std::string stop_reason;      // why the lifetime scan ended
  std::vector<TradeoffRow> rows;
  std::vector<SweepBest> best;  // one per requested sigma
};

// Scans n = 1, 2, ... until the allocator reports infeasibility (battery certificate
// or failed repair), recording one row per feasible lifetime. The row set is
// sigma-independent; each requested sigma picks the row minimizing
// sigma * d_mean - (1 - sigma) * lifetime_value(n), ties to the smallest n.
SweepResult tradeoff_sweep(FrameModel& model, std::span<const double> sigmas,
                           std::uint64_t master_seed, std::ostream* trace = nullptr);

// Re-runs the allocator for one lifetime with the sweep's per-n stream (bit-identical
// to the sweep's run) and fills the recorded per-frame values from full coupled
// solves.
EnergySchedule materialize_schedule(FrameModel& model, long n,
                                    std::uint64_t master_seed);

}  // namespace edt
