#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "edt/frame_types.hpp"

namespace edt {

// Transmit power and payload of one node at fading state theta, for a slot of
// length tau under a per-frame energy budget. The power is the largest value in
// [p_min, p_max] whose capacity payload the budget affords (bisection on the energy
// identity); below p_min the payload is reduced to what the budget buys at p_min.
// nullopt when even a zero payload at p_min does not fit.
std::optional<PolicyPoint> power_policy_at(double theta, double tau, double e_budget,
                                           const DeviceParams& dev, double h0, double w,
                                           const SolverConfig& cfg = {});

// Distortion realized at fading state theta under the policy above; +inf when the
// affordable payload is zero, nullopt when the policy itself is infeasible.
std::optional<double> realized_distortion(double theta, double tau, double e_budget,
                                          const DeviceParams& dev, double h0, double w,
                                          const SolverConfig& cfg = {});

struct ExpectedDistortion {
  double value = 0.0;  // mean distortion conditioned on transmitting
  double error = 0.0;  // quadrature refinement residual + tail width
  PowerPolicy policy;
};

// Mean distortion over fading states theta >= theta_tx (Rayleigh, unit mean),
// conditioned on transmitting. Piecewise adaptive Gauss-Legendre split at the policy
// regime boundaries, truncated where the survival function reaches
// cfg.tail_survival, plus the analytic bound for the tail.
std::optional<ExpectedDistortion> expected_distortion(double tau, double e_budget,
                                                      const DeviceParams& dev,
                                                      const ChannelModel& ch,
                                                      const SolverConfig& cfg = {});

// Slot-length searcher of one node at a fixed per-frame energy budget.
//
// Construction finds the window [tau_low, tau_high] of slot lengths satisfying the
// hard per-state bound delta(theta_tx, tau) <= d_th (the bound is unimodal in tau, so
// golden section plus two bisections). Queries then return the smallest slot in the
// window whose mean distortion meets a target, located on a log-spaced grid: a
// qualifying anchor cell comes from an earlier answer, from bisecting the decreasing
// branch of the hard bound (mean <= hard bound), or from a grid argmin search; the
// crossing cell is then found by bisection and the slot refined inside it by a
// guarded regula falsi. The mean is assumed locally monotone around the crossing;
// answered queries are kept and clamped so the returned slot stays exactly monotone
// in the target even where that assumption frays. Grid quadratures are memoized.
// Not thread-safe.
class NodeFadingPlan {
 public:
  NodeFadingPlan(const DeviceParams& dev, const ChannelModel& ch, double t_frame,
                 double e_budget, const SolverConfig& cfg = {});

  bool feasible() const { return feasible_; }
  const std::string& infeasible_reason() const { return reason_; }
  double tau_low() const { return tau_low_; }
  double tau_high() const { return tau_high_; }
  double e_budget() const { return e_budget_; }

  // Smallest slot with mean distortion <= target; nullopt if the window has none.
  std::optional<double> smallest_tau(double target) const;

  // Grid-resolution minimum of the mean over window slots <= tau_cap: a coarse
  // stride scan plus a local refine, so the answer depends only on the cap and
  // never on earlier queries. value is +inf when no grid slot fits under the cap.
  struct GridMin {
    std::size_t index = 0;
    double tau = 0.0;
    double value = 0.0;
  };
  GridMin min_mean_up_to(double tau_cap) const;

  double expected_at(double tau) const;      // conditional mean distortion
  double hard_bound_at(double tau) const;    // delta at theta_tx
  PowerPolicy policy_at(double tau) const;
  double energy_used(double tau) const;      // sup over fading states of the spend

 private:
  double delta_tx(double tau) const;
  double delta_floor(double tau) const;  // distortion of the energy-limited payload
  double grid_delta_tx(std::size_t j) const;
  double grid_floor(std::size_t j) const;
  double grid_mean(std::size_t j) const;
  bool cell_qualifies(std::size_t j, double target) const;
  double refine_crossing(std::size_t j, double target) const;
  std::size_t local_argmin_mean(std::size_t lo, std::size_t hi, std::size_t seed) const;

  DeviceParams dev_;
  ChannelModel ch_;
  SolverConfig cfg_;
  double t_frame_ = 0.0;
  double e_budget_ = 0.0;
  double h0_ = 0.0;
  double theta_tx_ = 0.0;
  bool feasible_ = false;
  std::string reason_;
  double tau_low_ = 0.0, tau_high_ = 0.0;
  std::size_t j_hard_min_ = 0;  // grid cell of the hard bound's argmin
  std::vector<double> pts_;  // scan grid restricted to the window, pts_[0] = tau_low
  mutable std::vector<double> mean_, dtx_, floor_;  // memo, NaN = not computed
  // target -> {slot, crossing cell}, kept monotone in the target
  mutable std::map<double, std::pair<double, std::size_t>> answered_;
  mutable double infeasible_below_ = -1.0;  // targets <= this have no slot
};

// Smallest slot for one node at worst-case distortion fraction gamma; thin wrapper
// over NodeFadingPlan for one-shot queries.
std::optional<double> tau_search(double gamma, double e_budget, const DeviceParams& dev,
                                 const ChannelModel& ch, double t_frame,
                                 const SolverConfig& cfg = {});

// Minimax frame schedule under statistical CSI: bisection on gamma where the
// feasibility check allots every node its smallest admissible slot. Falls back to
// the full-CSI solver when the channel has no fading.
FrameSolution solve_frame_statistical(std::span<const double> energies,
                                      std::span<const DeviceParams> devices,
                                      const ChannelModel& ch, double t_frame,
                                      const SolverConfig& cfg = {});

// Same, over caller-owned plans (one per node, already bound to that node's energy
// budget); lets the lifetime planner reuse plan memoizations across solves.
FrameSolution solve_frame_statistical_with_plans(
    std::span<NodeFadingPlan* const> plans, std::span<const DeviceParams> devices,
    const ChannelModel& ch, double t_frame, const SolverConfig& cfg = {});

}  // namespace edt
