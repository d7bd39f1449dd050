#include "edt/frame_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "edt/search.hpp"

namespace edt {

double tx_bit_cost(double power, const TxCostContext& ctx) {
  if (!(power > 0.0)) return std::numeric_limits<double>::infinity();
  double rate = std::log2(1.0 + ctx.gain * power);
  if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
  return (power / ctx.eta_a + ctx.e_c_rate) / rate;
}

CostMinimum tx_bit_cost_minimum(const TxCostContext& ctx, double rel_tol) {
  double lo = ctx.p_min * 1e-3;
  double hi = ctx.p_max * 1e3;
  const double lo_floor = ctx.p_min * 1e-18;
  const double hi_ceil = ctx.p_max * 1e12;
  auto cost = [&](double p) { return tx_bit_cost(p, ctx); };
  for (int round = 0; round < 24; ++round) {
    auto [x, v] = golden_min(cost, lo, hi, rel_tol);
    bool at_lo = x <= lo * 1.5 && lo > lo_floor;
    bool at_hi = x >= hi / 1.5 && hi < hi_ceil;
    if (at_lo) {
      lo = std::max(lo_floor, lo * 1e-3);
      continue;
    }
    if (at_hi) {
      hi = std::min(hi_ceil, hi * 1e3);
      continue;
    }
    return {x, v};
  }
  auto [x, v] = golden_min(cost, lo, hi, rel_tol);
  return {x, v};
}

double payload_for_gamma(double gamma, const DeviceParams& dev) {
  if (gamma < 0.0 || gamma > 1.0) throw std::domain_error("gamma must be in [0, 1]");
  return inverse_distortion(gamma * dev.d_th, dev.compression) * dev.l0;
}

std::optional<double> best_power_for_budget(double gamma, double e_budget,
                                            const DeviceParams& dev, double gain,
                                            double w, const SolverConfig& cfg) {
  if (gain <= 0.0) return std::nullopt;
  double l = payload_for_gamma(gamma, dev);
  double tx_budget = e_budget - processing_energy(l, dev.l0, dev.compression) -
                     dev.radio.beta_const;
  if (!(tx_budget > 0.0)) return std::nullopt;
  // Affordable per-bit cost: a power p fits the budget iff cost(p) <= rhs.
  double rhs = w / l * tx_budget;
  TxCostContext ctx{gain, dev.radio.eta_a, dev.radio.e_c_rate, dev.radio.p_min,
                    dev.radio.p_max};
  CostMinimum gm = tx_bit_cost_minimum(ctx, cfg.golden_rel_tol);
  if (gm.value > rhs) return std::nullopt;  // budget below the cheapest operating point
  double cost_pmax = tx_bit_cost(dev.radio.p_max, ctx);
  if (cost_pmax <= rhs) return dev.radio.p_max;  // power cap binds before the budget
  if (gm.power >= dev.radio.p_max) return std::nullopt;  // cost still falling at p_max
  // Cost is increasing on [gm.power, p_max]; take the largest power that still fits,
  // staying on the affordable side.
  double lo = std::min(gm.power, dev.radio.p_max);
  double hi = dev.radio.p_max;
  for (int it = 0; it < 200 && (hi - lo) > cfg.power_tol; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (tx_bit_cost(mid, ctx) <= rhs ? lo : hi) = mid;
  }
  if (lo < dev.radio.p_min) return std::nullopt;
  return lo;
}

GammaFeasibility frame_feasible_at_gamma(double gamma, std::span<const double> energies,
                                         std::span<const DeviceParams> devices,
                                         std::span<const double> gains, double w,
                                         double t_frame, const SolverConfig& cfg) {
  GammaFeasibility out;
  out.nodes.reserve(devices.size());
  double tau_sum = 0.0;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const DeviceParams& dev = devices[i];
    auto p = best_power_for_budget(gamma, energies[i], dev, gains[i], w, cfg);
    if (!p) {
      out.binding = "node " + std::to_string(dev.id) + ": energy budget";
      return out;
    }
    double l = payload_for_gamma(gamma, dev);
    double rate = shannon_rate(gains[i], *p, w);
    NodeAllocation na;
    na.id = dev.id;
    na.power = *p;
    na.l_bits = l;
    na.tau = l / rate;
    na.distortion = distortion(l / dev.l0, dev.compression);
    na.e_used = total_energy(*p, na.tau, l, dev);
    tau_sum += na.tau;
    out.nodes.push_back(std::move(na));
  }
  if (tau_sum > t_frame) {
    out.binding = "time: slots exceed the frame";
    out.nodes.clear();
    return out;
  }
  out.feasible = true;
  out.tau_total = tau_sum;
  return out;
}

namespace {

FrameSolution solve_with_gains(std::span<const double> energies,
                               std::span<const DeviceParams> devices,
                               const ChannelModel& ch, double t_frame,
                               std::span<const double> gains, const SolverConfig& cfg) {
  if (energies.size() != devices.size() || gains.size() != devices.size())
    throw std::domain_error("frame solver: mismatched energies/devices/gains");
  FrameSolution sol;
  if (devices.empty()) {
    sol.feasible = true;
    sol.gamma_star = 0.0;
    return sol;
  }
  auto check = [&](double g) {
    return frame_feasible_at_gamma(g, energies, devices, gains, ch.w, t_frame, cfg);
  };
  GammaFeasibility at_one = check(1.0);
  if (!at_one.feasible) {
    sol.binding = at_one.binding;
    return sol;
  }
  GammaFeasibility at_zero = check(0.0);
  if (at_zero.feasible) {
    sol.feasible = true;
    sol.gamma_star = 0.0;
    sol.nodes = std::move(at_zero.nodes);
    sol.tau_total = at_zero.tau_total;
    return sol;
  }
  double lo = 0.0, hi = 1.0;
  while (hi - lo > cfg.tol_gamma) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (check(mid).feasible ? hi : lo) = mid;
  }
  GammaFeasibility fin = check(hi);
  sol.feasible = true;
  sol.gamma_star = hi;
  sol.nodes = std::move(fin.nodes);
  sol.tau_total = fin.tau_total;
  return sol;
}

}  // namespace

FrameSolution solve_frame_full_csi_gains(std::span<const double> energies,
                                         std::span<const DeviceParams> devices,
                                         const ChannelModel& ch, double t_frame,
                                         std::span<const double> gains,
                                         const SolverConfig& cfg) {
  return solve_with_gains(energies, devices, ch, t_frame, gains, cfg);
}

FrameSolution solve_frame_full_csi(std::span<const double> energies,
                                   std::span<const DeviceParams> devices,
                                   const ChannelModel& ch, double t_frame,
                                   const SolverConfig& cfg) {
  std::vector<double> gains(devices.size());
  for (std::size_t i = 0; i < devices.size(); ++i)
    gains[i] = ch.mean_gain(devices[i].distance);
  return solve_with_gains(energies, devices, ch, t_frame, gains, cfg);
}

FrameSolution solve_frame_suboptimal(std::span<const double> energies,
                                     std::span<const DeviceParams> devices,
                                     const ChannelModel& ch, double t_frame,
                                     const SolverConfig& cfg) {
  double factor =
      ch.fading == Fading::none ? 1.0 : fading_threshold(ch.pr_tx, ch.fading);
  std::vector<double> gains(devices.size());
  for (std::size_t i = 0; i < devices.size(); ++i)
    gains[i] = ch.mean_gain(devices[i].distance) * factor;
  return solve_with_gains(energies, devices, ch, t_frame, gains, cfg);
}

}  // namespace edt
