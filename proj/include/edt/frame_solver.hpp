#pragma once

#include <optional>
#include <span>

#include "edt/frame_types.hpp"

namespace edt {

// Per-bit transmission cost model of one link: cost(p) is the energy drawn per
// transmitted bit, scaled by the bandwidth, when sending at power p over a link of
// normalized gain `gain`. Unimodal on p > 0 (decreasing, then increasing).
struct TxCostContext {
  double gain;      // normalized channel gain seen by the transmitter
  double eta_a;     // amplifier efficiency
  double e_c_rate;  // circuitry power while transmitting, W
  double p_min;
  double p_max;
};

double tx_bit_cost(double power, const TxCostContext& ctx);

struct CostMinimum {
  double power;
  double value;
};

// Unconstrained minimizer of the per-bit cost. The initial bracket
// [p_min * 1e-3, p_max * 1e3] expands geometrically when the minimum lands on an
// edge; the lower edge is floored because a radio with zero circuitry power has its
// infimum at p -> 0+ where the cost value still converges.
CostMinimum tx_bit_cost_minimum(const TxCostContext& ctx, double rel_tol = 1e-9);

// Compressed payload whose distortion equals gamma * d_th.
double payload_for_gamma(double gamma, const DeviceParams& dev);

// Largest transmit power in [p_min, p_max] whose slot fits the per-frame energy
// budget when the node sends the payload for `gamma`. nullopt when no power fits.
std::optional<double> best_power_for_budget(double gamma, double e_budget,
                                            const DeviceParams& dev, double gain,
                                            double w, const SolverConfig& cfg = {});

struct GammaFeasibility {
  bool feasible = false;
  std::vector<NodeAllocation> nodes;
  double tau_total = 0.0;
  std::string binding;
};

// Feasibility of one frame at a fixed worst-case distortion fraction gamma, with
// known per-node gains. Every node's distortion constraint is driven tight.
GammaFeasibility frame_feasible_at_gamma(double gamma, std::span<const double> energies,
                                         std::span<const DeviceParams> devices,
                                         std::span<const double> gains, double w,
                                         double t_frame, const SolverConfig& cfg = {});

// Minimax frame schedule with known channel gains: bisection on gamma down to
// cfg.tol_gamma, returning the allocation at the smallest feasible gamma found.
FrameSolution solve_frame_full_csi_gains(std::span<const double> energies,
                                         std::span<const DeviceParams> devices,
                                         const ChannelModel& ch, double t_frame,
                                         std::span<const double> gains,
                                         const SolverConfig& cfg = {});

// Gains taken at the mean channel (no fading margin).
FrameSolution solve_frame_full_csi(std::span<const double> energies,
                                   std::span<const DeviceParams> devices,
                                   const ChannelModel& ch, double t_frame,
                                   const SolverConfig& cfg = {});

// Conservative fading policy: plan the frame as if every admitted transmission saw
// the worst admissible gain h0 * theta_tx. Deterministic distortion, no per-state
// adaptation; upper-bounds the statistical solution.
FrameSolution solve_frame_suboptimal(std::span<const double> energies,
                                     std::span<const DeviceParams> devices,
                                     const ChannelModel& ch, double t_frame,
                                     const SolverConfig& cfg = {});

}  // namespace edt
