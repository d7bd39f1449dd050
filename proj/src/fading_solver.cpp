#include "edt/fading_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "edt/frame_solver.hpp"
#include "edt/search.hpp"

namespace edt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.6931471805599453;

// 16-point Gauss-Legendre rule on [-1, 1], positive half (symmetric).
constexpr double kGlX[8] = {0.0950125098376374, 0.2816035507792589,
                            0.4580167776572274, 0.6178762444026438,
                            0.7554044083550030, 0.8656312023878318,
                            0.9445750230732326, 0.9894009349916499};
constexpr double kGlW[8] = {0.1894506104550685, 0.1826034150449236,
                            0.1691565193950025, 0.1495959888165767,
                            0.1246289712555339, 0.0951585116824928,
                            0.0622535239386479, 0.0271524594117541};

template <class F>
double gl_panels(F&& f, double a, double b, int panels) {
  double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    double c = a + (p + 0.5) * h;
    double r = 0.5 * h;
    for (int k = 0; k < 8; ++k)
      sum += kGlW[k] * (f(c - r * kGlX[k]) + f(c + r * kGlX[k]));
  }
  return sum * 0.5 * h;  // weights sum to 2 on [-1, 1]
}

// Adaptive composite rule: double the panel count until the estimate settles. The
// absolute term keeps refinement bounded when the integral itself is nearly zero
// (distortion means at the floor), where a pure relative test never converges.
template <class F>
std::pair<double, double> gl_adaptive(F&& f, double a, double b, double rel_tol,
                                      double abs_tol) {
  if (!(b > a)) return {0.0, 0.0};
  double prev = gl_panels(f, a, b, 1);
  if (!std::isfinite(prev)) return {prev, kInf};
  for (int panels = 2; panels <= 64; panels *= 2) {
    double cur = gl_panels(f, a, b, panels);
    if (!std::isfinite(cur)) return {cur, kInf};
    double diff = std::fabs(cur - prev);
    if (diff <= rel_tol * std::fabs(cur) + abs_tol) return {cur, diff};
    prev = cur;
  }
  return {prev, std::fabs(prev) * rel_tol + abs_tol};
}

struct PolicyCtx {
  const DeviceParams& dev;
  double h0, w, tau, e_budget;

  double capacity(double p, double theta) const {
    return tau * w * std::log2(1.0 + h0 * theta * p);
  }
  double spend(double p, double theta) const {
    return detail::processing_energy_raw(capacity(p, theta), dev.l0, dev.compression) +
           dev.radio.beta_const +
           (p / dev.radio.eta_a + dev.radio.e_c_rate) * tau;
  }
  double min_spend() const {
    return detail::processing_energy_raw(0.0, dev.l0, dev.compression) +
           dev.radio.beta_const +
           (dev.radio.p_min / dev.radio.eta_a + dev.radio.e_c_rate) * tau;
  }
};

double distortion_of_payload(double l_bits, const DeviceParams& dev) {
  if (!(l_bits > 0.0)) return kInf;
  double eta = std::min(l_bits / dev.l0, 1.0);
  return distortion(eta, dev.compression);
}

}  // namespace

std::optional<PolicyPoint> power_policy_at(double theta, double tau, double e_budget,
                                           const DeviceParams& dev, double h0, double w,
                                           const SolverConfig& cfg) {
  if (theta < 0.0 || !(tau > 0.0)) throw std::domain_error("power_policy_at domain");
  PolicyCtx c{dev, h0, w, tau, e_budget};
  const RadioParams& r = dev.radio;
  if (c.spend(r.p_min, theta) > e_budget) {
    // Even the capacity payload at p_min is too expensive: pad the slot at p_min and
    // send only the bits the leftover processing budget affords.
    if (c.min_spend() > e_budget) return std::nullopt;
    double cp = dev.compression.e0_alpha;
    double l_en = (e_budget - r.beta_const -
                   (r.p_min / r.eta_a + r.e_c_rate) * tau -
                   dev.compression.beta_p * dev.l0) /
                  cp;  // cp > 0 here: a flat processing model never enters this branch
    return PolicyPoint{r.p_min, l_en, PolicyRegime::underuse};
  }
  if (c.spend(r.p_max, theta) <= e_budget)
    return PolicyPoint{r.p_max, c.capacity(r.p_max, theta), PolicyRegime::capped};
  // spend is concave increasing in p (linear processing energy over a log capacity),
  // so Newton from the affordable side climbs monotonically to the budget-exhausting
  // power without overshooting.
  double g = h0 * theta;
  double p = r.p_min;  // spend(p_min) <= e < spend(p_max) here
  for (int it = 0; it < 60; ++it) {
    double slope = dev.compression.e0_alpha * tau * w * g / ((1.0 + g * p) * kLn2) +
                   tau / r.eta_a;
    double step = (e_budget - c.spend(p, theta)) / slope;
    if (!(step > 0.0)) break;
    p = std::min(p + step, r.p_max);
    if (step < cfg.power_tol) break;
  }
  return PolicyPoint{p, c.capacity(p, theta), PolicyRegime::normal};
}

std::optional<double> realized_distortion(double theta, double tau, double e_budget,
                                          const DeviceParams& dev, double h0, double w,
                                          const SolverConfig& cfg) {
  auto pp = power_policy_at(theta, tau, e_budget, dev, h0, w, cfg);
  if (!pp) return std::nullopt;
  return distortion_of_payload(pp->l_bits, dev);
}

std::optional<ExpectedDistortion> expected_distortion(double tau, double e_budget,
                                                      const DeviceParams& dev,
                                                      const ChannelModel& ch,
                                                      const SolverConfig& cfg) {
  if (ch.fading != Fading::rayleigh)
    throw std::domain_error("expected_distortion needs a fading channel");
  double theta_tx = fading_threshold(ch.pr_tx, ch.fading);
  if (!(theta_tx > 0.0)) return std::nullopt;  // pr_tx = 1: no admissible policy
  double h0 = ch.mean_gain(dev.distance);
  PolicyCtx c{dev, h0, ch.w, tau, e_budget};
  if (c.min_spend() > e_budget) return std::nullopt;
  double theta_cap = theta_tx - std::log(cfg.tail_survival);
  const RadioParams& r = dev.radio;

  // The budget-exhausting power falls with theta; the policy is capped at p_max
  // below theta_a and padded at p_min above theta_b.
  auto uncapped_at = [&](double th) { return c.spend(r.p_max, th) > e_budget; };
  auto underuse_at = [&](double th) { return c.spend(r.p_min, th) > e_budget; };
  double theta_a, theta_b;
  if (uncapped_at(theta_tx))
    theta_a = theta_tx;
  else if (!uncapped_at(theta_cap))
    theta_a = theta_cap;
  else
    theta_a = bisect_to_true(uncapped_at, theta_tx, theta_cap, 1e-13);
  if (underuse_at(theta_tx))
    theta_b = theta_tx;
  else if (!underuse_at(theta_cap))
    theta_b = theta_cap;
  else
    theta_b = bisect_to_true(underuse_at, theta_tx, theta_cap, 1e-13);
  theta_b = std::max(theta_b, theta_a);

  auto integrand = [&](double th) {
    auto d = realized_distortion(th, tau, e_budget, dev, h0, ch.w, cfg);
    return (d ? *d : kInf) * std::exp(-th);
  };
  double value = 0.0, err = 0.0;
  auto [v1, e1] = gl_adaptive(integrand, theta_tx, theta_a, cfg.quad_rel_tol,
                              cfg.quad_abs_tol);
  auto [v2, e2] = gl_adaptive(integrand, theta_a, theta_b, cfg.quad_rel_tol,
                              cfg.quad_abs_tol);
  value += v1 + v2;
  err += e1 + e2;
  // Above theta_b the payload is energy-limited and independent of theta.
  double d_floor = 0.0;
  if (theta_b < theta_cap) {
    auto du = realized_distortion(theta_b + 0.5 * (theta_cap - theta_b), tau, e_budget,
                                  dev, h0, ch.w, cfg);
    d_floor = du ? *du : kInf;
    value += d_floor * (std::exp(-theta_b) - std::exp(-theta_cap));
  }
  // Truncated tail, bounded by the (non-increasing) distortion at the cut.
  auto d_cap = realized_distortion(theta_cap, tau, e_budget, dev, h0, ch.w, cfg);
  double dc = d_cap ? *d_cap : kInf;
  value += dc * std::exp(-theta_cap);
  err += std::max(0.0, dc - d_floor) * std::exp(-theta_cap);

  ExpectedDistortion out;
  out.value = value / ch.pr_tx;
  out.error = err / ch.pr_tx;
  out.policy =
      PowerPolicy{theta_tx, tau, e_budget, h0, ch.w, theta_a, theta_b, theta_cap, dev};
  return out;
}

std::optional<PolicyPoint> PowerPolicy::at(double theta, const SolverConfig& cfg) const {
  if (theta < theta_tx) return std::nullopt;  // silent below the admission state
  return power_policy_at(theta, tau, e_budget, dev, h0, w, cfg);
}

NodeFadingPlan::NodeFadingPlan(const DeviceParams& dev, const ChannelModel& ch,
                               double t_frame, double e_budget, const SolverConfig& cfg)
    : dev_(dev), ch_(ch), cfg_(cfg), t_frame_(t_frame), e_budget_(e_budget) {
  if (ch.fading != Fading::rayleigh)
    throw std::domain_error("NodeFadingPlan needs a fading channel");
  theta_tx_ = fading_threshold(ch.pr_tx, ch.fading);
  if (!(theta_tx_ > 0.0)) {
    reason_ = "pr_tx = 1 leaves no fading margin";
    return;
  }
  h0_ = ch.mean_gain(dev.distance);
  double l_min = inverse_distortion(dev.d_th, dev.compression) * dev.l0;
  double r_worst = shannon_rate(h0_ * theta_tx_, dev.radio.p_max, ch.w);
  if (!(r_worst > 0.0)) {
    reason_ = "zero rate at the admission fading state";
    return;
  }
  double tau_lb = l_min / r_worst;
  double e_left = e_budget - dev.radio.beta_const -
                  dev.compression.beta_p * dev.l0;
  if (e_left < 0.0) {
    reason_ = "budget below the constant per-frame cost";
    return;
  }
  double drain = dev.radio.p_min / dev.radio.eta_a + dev.radio.e_c_rate;
  double tau_cap = std::min(t_frame, e_left / drain);
  if (tau_lb > tau_cap) {
    reason_ = "minimum slot exceeds the frame or the energy cap";
    return;
  }
  auto dtx = [&](double tau) { return delta_tx(tau); };
  auto [tau_min, d_min] = golden_min(dtx, tau_lb, tau_cap, cfg_.golden_rel_tol);
  if (!(d_min <= dev.d_th)) {
    reason_ = "per-state distortion bound unreachable";
    return;
  }
  tau_low_ = dtx(tau_lb) <= dev.d_th
                 ? tau_lb
                 : bisect_to_true([&](double t) { return dtx(t) <= dev.d_th; }, tau_lb,
                                  tau_min, 1e-13);
  tau_high_ = dtx(tau_cap) <= dev.d_th
                  ? tau_cap
                  : bisect_to_true_abs_upper(
                        [&](double t) { return dtx(t) <= dev.d_th; }, tau_min, tau_cap,
                        tau_cap * 1e-13);
  feasible_ = true;

  int m = std::max(cfg_.tau_grid_points, 2);
  pts_.reserve(static_cast<std::size_t>(m) + 2);
  pts_.push_back(tau_low_);
  if (t_frame > tau_lb) {
    double ratio = std::log(t_frame / tau_lb);
    for (int i = 0; i < m; ++i) {
      double g = tau_lb * std::exp(ratio * i / (m - 1));
      if (g > tau_low_ && g < tau_high_) pts_.push_back(g);
    }
  }
  if (tau_high_ > tau_low_) pts_.push_back(tau_high_);
  mean_.assign(pts_.size(), std::numeric_limits<double>::quiet_NaN());
  dtx_.assign(pts_.size(), std::numeric_limits<double>::quiet_NaN());
  floor_.assign(pts_.size(), std::numeric_limits<double>::quiet_NaN());
  auto lb = std::lower_bound(pts_.begin(), pts_.end(), tau_min);
  j_hard_min_ = std::min(static_cast<std::size_t>(lb - pts_.begin()), pts_.size() - 1);
}

double NodeFadingPlan::delta_tx(double tau) const {
  auto d = realized_distortion(theta_tx_, tau, e_budget_, dev_, h0_, ch_.w, cfg_);
  return d ? *d : kInf;
}

double NodeFadingPlan::delta_floor(double tau) const {
  double cp = dev_.compression.e0_alpha;
  double e_tx_left = e_budget_ - dev_.radio.beta_const -
                     dev_.compression.beta_p * dev_.l0 -
                     (dev_.radio.p_min / dev_.radio.eta_a + dev_.radio.e_c_rate) * tau;
  if (cp == 0.0) return e_tx_left >= 0.0 ? 0.0 : kInf;  // payload never energy-limited
  double l_en = e_tx_left / cp;
  return distortion_of_payload(l_en, dev_);
}

double NodeFadingPlan::grid_delta_tx(std::size_t j) const {
  if (std::isnan(dtx_[j])) dtx_[j] = delta_tx(pts_[j]);
  return dtx_[j];
}

double NodeFadingPlan::grid_floor(std::size_t j) const {
  if (std::isnan(floor_[j])) floor_[j] = delta_floor(pts_[j]);
  return floor_[j];
}

double NodeFadingPlan::grid_mean(std::size_t j) const {
  if (std::isnan(mean_[j])) mean_[j] = expected_at(pts_[j]);
  return mean_[j];
}

double NodeFadingPlan::expected_at(double tau) const {
  auto ed = expected_distortion(tau, e_budget_, dev_, ch_, cfg_);
  return ed ? ed->value : kInf;
}

double NodeFadingPlan::hard_bound_at(double tau) const { return delta_tx(tau); }

bool NodeFadingPlan::cell_qualifies(std::size_t j, double target) const {
  if (grid_floor(j) > target) return false;     // mean >= floor
  if (grid_delta_tx(j) <= target) return true;  // mean <= value at theta_tx
  return grid_mean(j) <= target;
}

double NodeFadingPlan::refine_crossing(std::size_t j, double target) const {
  // mean crosses the target inside (pts_[j-1], pts_[j]]; guarded regula falsi
  // (Illinois) on the memoized endpoint values.
  double lo = pts_[j - 1], hi = pts_[j];
  double flo = grid_mean(j - 1) - target;
  double fhi = grid_mean(j) - target;
  if (!(flo > 0.0)) return lo;  // quadrature noise: the whole cell qualifies
  if (fhi > 0.0) return hi;     // qualified through the hard bound; keep the grid slot
  int side = 0;
  for (int it = 0; it < 32 && (hi - lo) > hi * 1e-9; ++it) {
    double mid = (lo * fhi - hi * flo) / (fhi - flo);
    double guard = 0.01 * (hi - lo);
    mid = std::min(std::max(mid, lo + guard), hi - guard);
    double fm = expected_at(mid) - target;
    if (fm <= 0.0) {
      hi = mid;
      fhi = fm;
      if (side == -1) flo *= 0.5;
      side = -1;
      if (fm == 0.0) break;
    } else {
      lo = mid;
      flo = fm;
      if (side == +1) fhi *= 0.5;
      side = +1;
    }
  }
  return hi;
}

std::size_t NodeFadingPlan::local_argmin_mean(std::size_t lo, std::size_t hi,
                                              std::size_t seed) const {
  // Downhill expansion from the seed with doubling steps, then ternary inside the
  // failed-probe bracket. Exact for a unimodal mean; a deterministic local minimum
  // otherwise.
  std::size_t best = std::min(std::max(seed, lo), hi);
  double fb = grid_mean(best);
  std::size_t span_l = 0, span_r = 0;  // distance to the failed probe per side
  for (int dir : {-1, +1}) {
    std::size_t step = 1;
    while (true) {
      std::size_t cand;
      if (dir < 0) {
        if (best < lo + step) {
          span_l = best - lo;
          break;
        }
        cand = best - step;
      } else {
        if (best + step > hi) {
          span_r = hi - best;
          break;
        }
        cand = best + step;
      }
      double fc = grid_mean(cand);
      if (fc < fb) {
        best = cand;
        fb = fc;
        step *= 2;
      } else {
        (dir < 0 ? span_l : span_r) = step;
        break;
      }
    }
  }
  std::size_t l = best - std::min(span_l, best - lo);
  std::size_t r = best + std::min(span_r, hi - best);
  while (r - l > 2) {
    std::size_t m1 = l + (r - l) / 3;
    std::size_t m2 = r - (r - l) / 3;
    if (grid_mean(m1) <= grid_mean(m2))
      r = m2;
    else
      l = m1 + 1;
  }
  best = l;
  fb = grid_mean(l);
  for (std::size_t j = l + 1; j <= r; ++j)
    if (grid_mean(j) < fb) {
      best = j;
      fb = grid_mean(j);
    }
  return best;
}

NodeFadingPlan::GridMin NodeFadingPlan::min_mean_up_to(double tau_cap) const {
  GridMin out;
  out.value = kInf;
  if (!feasible_) return out;
  auto ub = std::upper_bound(pts_.begin(), pts_.end(), tau_cap);
  if (ub == pts_.begin()) return out;  // cap below the window
  std::size_t last = static_cast<std::size_t>(ub - pts_.begin()) - 1;
  // Coarse stride scan (memoized probes, so repeats under any cap are cheap), then
  // a local refine boxed to the stride around the best probe.
  constexpr std::size_t kStride = 16;
  std::size_t best = 0;
  double fb = grid_mean(0);
  for (std::size_t j = kStride; j < last; j += kStride) {
    double fj = grid_mean(j);
    if (fj < fb) {
      best = j;
      fb = fj;
    }
  }
  if (last > 0 && grid_mean(last) < fb) best = last;
  std::size_t lo = best > kStride ? best - kStride : 0;
  std::size_t hi = std::min(best + kStride, last);
  best = local_argmin_mean(lo, hi, best);
  out.index = best;
  out.tau = pts_[best];
  out.value = grid_mean(best);
  return out;
}

std::optional<double> NodeFadingPlan::smallest_tau(double target) const {
  if (!feasible_) return std::nullopt;
  if (target <= infeasible_below_) return std::nullopt;
  if (auto it = answered_.find(target); it != answered_.end()) return it->second.first;

  const std::size_t M = pts_.size();
  // Index bounds from earlier answers: the first qualifying cell is non-increasing
  // in the target, so a looser answer bounds below and a tighter one above (and the
  // tighter one's cell already qualifies here, giving a free anchor).
  auto nxt = answered_.lower_bound(target);  // first key > target (equal handled)
  std::size_t lo_cell = nxt != answered_.end() ? nxt->second.second : 0;
  std::optional<std::size_t> anchor;
  if (nxt != answered_.begin()) anchor = std::prev(nxt)->second.second;

  std::optional<std::size_t> crossing;
  if (lo_cell < M && cell_qualifies(lo_cell, target)) {
    crossing = lo_cell;  // cells below lo_cell are ruled out by the looser answer
  } else if (lo_cell < M) {
    if (!anchor) {
      // Hard bound decreases up to its argmin and dominates the mean: bisect it for
      // a cheap qualifying anchor.
      if (j_hard_min_ > lo_cell && grid_delta_tx(j_hard_min_) <= target) {
        std::size_t lo = lo_cell, hi = j_hard_min_;
        while (hi > lo) {
          std::size_t mid = lo + (hi - lo) / 2;
          if (grid_delta_tx(mid) <= target)
            hi = mid;
          else
            lo = mid + 1;
        }
        anchor = hi;
      } else {
        // No hard-bound anchor: fall back on the grid minimum of the mean itself.
        GridMin mm = min_mean_up_to(pts_.back());
        if (mm.value <= target && mm.index >= lo_cell) anchor = mm.index;
      }
    }
    if (anchor && *anchor > lo_cell && !cell_qualifies(*anchor, target)) {
      anchor.reset();  // stale tighter-answer cell (clamped answer); re-anchor
      GridMin mm = min_mean_up_to(pts_.back());
      if (mm.value <= target && mm.index >= lo_cell) anchor = mm.index;
    }
    if (anchor && *anchor >= lo_cell) {
      // First qualifying cell in [lo_cell, anchor]; the mean is treated as locally
      // monotone here, and the answered-map clamps below absorb any miss.
      std::size_t lo = lo_cell, hi = *anchor;
      while (hi > lo) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (cell_qualifies(mid, target))
          hi = mid;
        else
          lo = mid + 1;
      }
      crossing = hi;
    }
  }

  std::optional<double> ans;
  if (crossing) {
    ans = *crossing == 0 ? pts_[0] : refine_crossing(*crossing, target);
  }
  auto it = answered_.lower_bound(target);
  if (!ans) {
    // No grid cell qualified. A previously answered tighter query would contradict
    // that; fall back on it to keep feasibility monotone in the target.
    if (it != answered_.begin()) {
      auto prev = std::prev(it);
      answered_.emplace(target, prev->second);
      return prev->second.first;
    }
    infeasible_below_ = std::max(infeasible_below_, target);
    return std::nullopt;
  }
  // Clamp so the answered slot is monotone non-increasing in the target.
  if (it != answered_.end()) *ans = std::max(*ans, it->second.first);
  if (it != answered_.begin()) *ans = std::min(*ans, std::prev(it)->second.first);
  answered_.emplace(target, std::make_pair(*ans, *crossing));
  return ans;
}

PowerPolicy NodeFadingPlan::policy_at(double tau) const {
  auto ed = expected_distortion(tau, e_budget_, dev_, ch_, cfg_);
  if (!ed) throw std::domain_error("policy_at: infeasible slot");
  return ed->policy;
}

double NodeFadingPlan::energy_used(double tau) const {
  double theta_cap = theta_tx_ - std::log(cfg_.tail_survival);
  auto pp = power_policy_at(theta_cap, tau, e_budget_, dev_, h0_, ch_.w, cfg_);
  if (pp && pp->regime == PolicyRegime::capped) {
    // Power-capped across all integrated states: the budget is never exhausted.
    return detail::processing_energy_raw(pp->l_bits, dev_.l0, dev_.compression) +
           dev_.radio.beta_const +
           (dev_.radio.p_max / dev_.radio.eta_a + dev_.radio.e_c_rate) * tau;
  }
  return e_budget_;
}

std::optional<double> tau_search(double gamma, double e_budget, const DeviceParams& dev,
                                 const ChannelModel& ch, double t_frame,
                                 const SolverConfig& cfg) {
  NodeFadingPlan plan(dev, ch, t_frame, e_budget, cfg);
  return plan.smallest_tau(gamma * dev.d_th);
}

FrameSolution solve_frame_statistical_with_plans(
    std::span<NodeFadingPlan* const> plans, std::span<const DeviceParams> devices,
    const ChannelModel& ch, double t_frame, const SolverConfig& cfg) {
  FrameSolution sol;
  if (devices.empty()) {
    sol.feasible = true;
    sol.gamma_star = 0.0;
    return sol;
  }
  for (std::size_t i = 0; i < devices.size(); ++i) {
    if (!plans[i]->feasible()) {
      sol.binding = "node " + std::to_string(devices[i].id) + ": " +
                    plans[i]->infeasible_reason();
      return sol;
    }
  }
  std::vector<double> taus(devices.size());
  auto feasible_at = [&](double gamma, std::string* why) {
    double sum = 0.0;
    for (std::size_t i = 0; i < devices.size(); ++i) {
      auto t = plans[i]->smallest_tau(gamma * devices[i].d_th);
      if (!t) {
        if (why)
          *why = "node " + std::to_string(devices[i].id) + ": mean distortion target";
        return false;
      }
      taus[i] = *t;
      sum += *t;
    }
    if (sum > t_frame) {
      if (why) *why = "time: slots exceed the frame";
      return false;
    }
    return true;
  };
  std::string why;
  if (!feasible_at(1.0, &why)) {
    sol.binding = why;
    return sol;
  }
  double gamma = 1.0;
  if (feasible_at(0.0, nullptr)) {
    gamma = 0.0;
  } else {
    double lo = 0.0, hi = 1.0;
    while (hi - lo > cfg.tol_gamma) {
      double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (feasible_at(mid, nullptr) ? hi : lo) = mid;
    }
    gamma = hi;
    feasible_at(gamma, nullptr);  // refresh taus at the returned gamma
  }
  sol.feasible = true;
  sol.gamma_star = gamma;
  sol.nodes.reserve(devices.size());
  double tau_sum = 0.0;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const DeviceParams& dev = devices[i];
    double e_budget = plans[i]->e_budget();
    NodeAllocation na;
    na.id = dev.id;
    na.tau = taus[i];
    auto ed = expected_distortion(taus[i], e_budget, dev, ch, cfg);
    na.distortion = ed ? ed->value : kInf;
    if (ed) na.policy = ed->policy;
    auto at_tx = power_policy_at(fading_threshold(ch.pr_tx, ch.fading), taus[i],
                                 e_budget, dev, ch.mean_gain(dev.distance), ch.w, cfg);
    if (at_tx) {
      na.power = at_tx->power;
      na.l_bits = at_tx->l_bits;
    }
    na.e_used = plans[i]->energy_used(taus[i]);
    tau_sum += na.tau;
    sol.nodes.push_back(std::move(na));
  }
  sol.tau_total = tau_sum;
  return sol;
}

FrameSolution solve_frame_statistical(std::span<const double> energies,
                                      std::span<const DeviceParams> devices,
                                      const ChannelModel& ch, double t_frame,
                                      const SolverConfig& cfg) {
  if (ch.fading == Fading::none)
    return solve_frame_full_csi(energies, devices, ch, t_frame, cfg);
  if (energies.size() != devices.size())
    throw std::domain_error("frame solver: mismatched energies/devices");
  std::vector<std::unique_ptr<NodeFadingPlan>> plans;
  std::vector<NodeFadingPlan*> raw;
  plans.reserve(devices.size());
  for (std::size_t i = 0; i < devices.size(); ++i) {
    plans.push_back(
        std::make_unique<NodeFadingPlan>(devices[i], ch, t_frame, energies[i], cfg));
    raw.push_back(plans.back().get());
  }
  return solve_frame_statistical_with_plans(raw, devices, ch, t_frame, cfg);
}

}  // namespace edt
