#include "edt/planner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "edt/frame_solver.hpp"
#include "edt/model.hpp"

namespace edt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

std::vector<std::uint64_t> column_key(const Eigen::VectorXd& v) {
  std::vector<std::uint64_t> k(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) k[static_cast<std::size_t>(i)] = bits(v[i]);
  return k;
}

}  // namespace

double EnvelopeSlice::value(double e) const {
  if (ke.empty()) return kInf;
  if (e <= ke.front()) return kf.front();
  if (e >= ke.back()) return floor_value;
  auto it = std::upper_bound(ke.begin(), ke.end(), e);
  std::size_t i = static_cast<std::size_t>(it - ke.begin());  // ke[i-1] <= e < ke[i]
  double x0 = ke[i - 1], x1 = ke[i];
  double t = (e - x0) / (x1 - x0);
  return kf[i - 1] + t * (kf[i] - kf[i - 1]);
}

EnvelopeSlice build_slice(const SliceObjective& objective, double e_cap,
                          const PlannerConfig& cfg) {
  EnvelopeSlice s;
  if (!(e_cap > 0.0)) {
    s.infeasible_reason = "energy cap is not positive";
    return s;
  }
  auto at_cap = objective(e_cap);
  if (!at_cap) {
    s.infeasible_reason = "infeasible at every energy up to the cap";
    return s;
  }
  const double floor_ref = *at_cap;

  // Smallest feasible energy. Zero energy can never fund the per-slot fixed cost,
  // so [0, e_cap] brackets the feasibility edge.
  double lo = 0.0, hi = e_cap, v_hi = floor_ref;
  while (hi - lo > cfg.slice_e_tol * hi) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    auto v = objective(mid);
    if (v) {
      hi = mid;
      v_hi = *v;
    } else {
      lo = mid;
    }
  }
  const double e_lower = hi;
  const double v_lower = v_hi;

  // Smallest energy whose objective is flat (within flat_tol of the cap value).
  double e_upper = e_lower;
  double v_upper = v_lower;
  if (v_lower > floor_ref + cfg.flat_tol) {
    double flo = e_lower, fhi = e_cap, v_fhi = floor_ref;
    while (fhi - flo > cfg.slice_e_tol * fhi) {
      double mid = 0.5 * (flo + fhi);
      if (mid <= flo || mid >= fhi) break;
      auto v = objective(mid);
      if (v && *v <= floor_ref + cfg.flat_tol) {
        fhi = mid;
        v_fhi = *v;
      } else {
        flo = mid;
      }
    }
    e_upper = fhi;
    v_upper = v_fhi;
  }

  s.feasible = true;
  if (e_upper <= e_lower * (1.0 + 1e-12)) {
    // Flat from the first feasible joule.
    s.e_lower = s.e_upper = e_lower;
    s.ke = {e_lower};
    s.kf = {v_lower};
    s.floor_value = v_lower;
    s.sample_e = {e_lower};
    s.sample_f = {v_lower};
    return s;
  }

  const int m = std::max(2, cfg.envelope_samples);
  std::vector<double> xs, ys;
  xs.reserve(static_cast<std::size_t>(m));
  ys.reserve(static_cast<std::size_t>(m));
  const double lr = std::log(e_upper / e_lower);
  for (int i = 0; i < m; ++i) {
    double x = e_lower * std::exp(lr * static_cast<double>(i) / (m - 1));
    if (!xs.empty() && x <= xs.back() * (1.0 + 1e-15)) continue;
    double y;
    if (i == 0) {
      y = v_lower;
    } else if (i == m - 1) {
      x = e_upper;
      y = v_upper;
    } else {
      auto v = objective(x);
      // The objective is monotone, so interior infeasibility is edge jitter of the
      // feasibility bisection; carry the previous level.
      y = v ? *v : ys.back();
    }
    if (!ys.empty()) y = std::min(y, ys.back());  // enforce non-increasing samples
    xs.push_back(x);
    ys.push_back(y);
  }
  s.sample_e = xs;
  s.sample_f = ys;

  // Greatest convex minorant: pool-adjacent-violators on the chord slopes with the
  // energy gaps as weights, then re-integrate from the left endpoint.
  struct Block {
    double slope;
    double weight;
    std::size_t last;  // index of the rightmost sample in the block
  };
  std::vector<Block> st;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    double w = xs[i + 1] - xs[i];
    Block b{(ys[i + 1] - ys[i]) / w, w, i + 1};
    while (!st.empty() && st.back().slope > b.slope) {
      b.slope = (b.slope * b.weight + st.back().slope * st.back().weight) /
                (b.weight + st.back().weight);
      b.weight += st.back().weight;
      st.pop_back();
    }
    st.push_back(b);
  }
  s.ke = {xs.front()};
  s.kf = {ys.front()};
  double y = ys.front();
  double xprev = xs.front();
  for (const Block& b : st) {
    double xr = xs[b.last];
    y += b.slope * (xr - xprev);
    s.ke.push_back(xr);
    s.kf.push_back(y);
    xprev = xr;
  }
  s.e_lower = s.ke.front();
  s.e_upper = s.ke.back();
  s.floor_value = s.kf.back();
  double gap = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    gap = std::max(gap, ys[i] - s.value(xs[i]));
  s.convexification_gap = gap;
  return s;
}

WaterFillResult water_fill(std::span<const FrameSliceRef> frames, double budget) {
  WaterFillResult res;
  const std::size_t n = frames.size();
  res.energy = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  res.at_upper.assign(n, 0);
  if (n == 0) {
    res.feasible = true;
    return res;
  }

  struct Seg {
    double slope;
    double cap;     // total pourable energy: member count * segment length
    double filled;  // poured so far
  };
  struct Group {
    const EnvelopeSlice* slice;
    double cut;
    int count = 0;
    double e_low = 0.0;
    double e_up = 0.0;  // effective flat level after the cut
    std::vector<Seg> segs;
  };
  std::vector<Group> groups;
  std::vector<std::size_t> frame_group(n);
  for (std::size_t k = 0; k < n; ++k) {
    const EnvelopeSlice* sl = frames[k].slice;
    if (!sl || !sl->feasible) {
      res.infeasible_reason = "frame " + std::to_string(k) + ": infeasible cost slice";
      return res;
    }
    double cut = frames[k].cut;
    std::size_t g = groups.size();
    for (std::size_t j = 0; j < groups.size(); ++j) {
      if (groups[j].slice == sl && bits(groups[j].cut) == bits(cut)) {
        g = j;
        break;
      }
    }
    if (g == groups.size()) {
      Group grp;
      grp.slice = sl;
      grp.cut = cut;
      grp.e_low = sl->e_lower;
      grp.e_up = sl->e_lower;
      if (sl->kf.front() > cut) {
        // Segment portions above the cut still buy objective; below it they don't.
        grp.e_up = sl->e_upper;
        for (std::size_t i = 0; i + 1 < sl->ke.size(); ++i) {
          double y0 = sl->kf[i], y1 = sl->kf[i + 1];
          double x0 = sl->ke[i], x1 = sl->ke[i + 1];
          if (y1 >= cut) {
            grp.segs.push_back({(y1 - y0) / (x1 - x0), 0.0, 0.0});
            grp.segs.back().cap = x1 - x0;  // scaled by count later
          } else {
            double t = (y0 - cut) / (y0 - y1);  // y0 > cut >= y1, slope < 0
            double xc = x0 + t * (x1 - x0);
            if (xc > x0) grp.segs.push_back({(y1 - y0) / (x1 - x0), xc - x0, 0.0});
            grp.e_up = xc;
            break;
          }
        }
      }
      groups.push_back(std::move(grp));
    }
    groups[g].count += 1;
    frame_group[k] = g;
  }

  double sum_lower = 0.0, pourable = 0.0;
  for (Group& g : groups) {
    for (Seg& sg : g.segs) sg.cap *= g.count;
    sum_lower += g.e_low * g.count;
    for (const Seg& sg : g.segs) pourable += sg.cap;
  }
  if (sum_lower > budget) {
    res.infeasible_reason = "per-frame energy floors exceed the budget";
    return res;
  }

  double pour = std::min(budget - sum_lower, pourable);
  struct Ref {
    double slope;
    std::size_t g, i;
  };
  std::vector<Ref> order;
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (std::size_t i = 0; i < groups[g].segs.size(); ++i)
      order.push_back({groups[g].segs[i].slope, g, i});
  std::stable_sort(order.begin(), order.end(),
                   [](const Ref& a, const Ref& b) { return a.slope < b.slope; });

  double lambda = 0.0;
  bool exhausted_all = pour >= pourable;
  std::size_t i = 0;
  while (i < order.size() && pour > 0.0) {
    std::size_t j = i;
    double batch_cap = 0.0;
    while (j < order.size() && bits(order[j].slope) == bits(order[i].slope)) {
      batch_cap += groups[order[j].g].segs[order[j].i].cap;
      ++j;
    }
    double frac = pour >= batch_cap ? 1.0 : pour / batch_cap;
    for (std::size_t t = i; t < j; ++t) {
      Seg& sg = groups[order[t].g].segs[order[t].i];
      sg.filled = frac * sg.cap;
    }
    lambda = -order[i].slope;
    pour -= std::min(pour, batch_cap);
    i = j;
  }
  if (exhausted_all) lambda = 0.0;

  for (std::size_t k = 0; k < n; ++k) {
    Group& g = groups[frame_group[k]];
    double filled = 0.0;
    bool full = true;
    for (const Seg& sg : g.segs) {
      filled += sg.filled / g.count;
      full = full && sg.filled >= sg.cap;
    }
    res.energy[static_cast<Eigen::Index>(k)] = g.e_low + filled;
    res.at_upper[k] = full ? 1 : 0;
  }
  res.lambda = lambda;
  res.feasible = true;
  return res;
}

FrameModel::FrameModel(CsiMode mode, std::vector<DeviceParams> devices,
                       ChannelModel channel, double t_frame,
                       std::vector<double> zeta_pattern, std::vector<double> batteries,
                       SolverConfig solver_cfg, PlannerConfig planner_cfg)
    : mode_(mode),
      devices_(std::move(devices)),
      ch_(channel),
      t_frame_(t_frame),
      batteries_(std::move(batteries)),
      scfg_(solver_cfg),
      pcfg_(planner_cfg),
      pattern_(std::move(zeta_pattern)) {
  if (batteries_.size() != devices_.size())
    throw std::domain_error("planner: one battery per device is required");
  for (double b : batteries_)
    if (!(b > 0.0)) throw std::domain_error("planner: batteries must be > 0");
  if (pattern_.empty()) pattern_ = {1.0};
  for (double z : pattern_)
    if (!(z > 0.0)) throw std::domain_error("planner: zeta pattern must be > 0");
  pattern_class_.resize(pattern_.size());
  for (std::size_t i = 0; i < pattern_.size(); ++i) {
    std::size_t c = class_zeta_.size();
    for (std::size_t j = 0; j < class_zeta_.size(); ++j)
      if (bits(class_zeta_[j]) == bits(pattern_[i])) {
        c = j;
        break;
      }
    if (c == class_zeta_.size()) {
      class_zeta_.push_back(pattern_[i]);
      std::vector<DeviceParams> devs = devices_;
      for (DeviceParams& d : devs) d.l0 *= pattern_[i];
      class_devs_.push_back(std::move(devs));
    }
    pattern_class_[i] = static_cast<int>(c);
  }
}

int FrameModel::class_of_frame(long k) const {
  return pattern_class_[static_cast<std::size_t>(k) % pattern_class_.size()];
}

NodeFadingPlan* FrameModel::plan_for(int c, int node, double e_budget) {
  auto key = std::make_tuple(c, node, bits(e_budget));
  auto it = plans_.find(key);
  if (it != plans_.end()) {
    plan_order_.splice(plan_order_.end(), plan_order_, it->second.second);
    return it->second.first.get();
  }
  auto plan = std::make_unique<NodeFadingPlan>(
      class_devs_[static_cast<std::size_t>(c)][static_cast<std::size_t>(node)], ch_,
      t_frame_, e_budget, scfg_);
  NodeFadingPlan* raw = plan.get();
  plan_order_.push_back(key);
  plans_.emplace(key, std::make_pair(std::move(plan), std::prev(plan_order_.end())));
  while (plan_order_.size() > plan_cap_) {
    plans_.erase(plan_order_.front());
    plan_order_.pop_front();
  }
  return raw;
}

FrameSolution FrameModel::solve_column(int c, const Eigen::VectorXd& energies) {
  const auto& devs = class_devs_[static_cast<std::size_t>(c)];
  std::vector<double> e(energies.data(), energies.data() + energies.size());
  switch (mode_) {
    case CsiMode::full_csi:
      return solve_frame_full_csi(e, devs, ch_, t_frame_, scfg_);
    case CsiMode::suboptimal:
      return solve_frame_suboptimal(e, devs, ch_, t_frame_, scfg_);
    case CsiMode::statistical: {
      if (ch_.fading == Fading::none)
        return solve_frame_full_csi(e, devs, ch_, t_frame_, scfg_);
      std::vector<NodeFadingPlan*> plans(devs.size());
      for (std::size_t j = 0; j < devs.size(); ++j)
        plans[j] = plan_for(c, static_cast<int>(j), e[j]);
      return solve_frame_statistical_with_plans(plans, devs, ch_, t_frame_, scfg_);
    }
  }
  throw std::domain_error("planner: unknown CSI mode");
}

const EnvelopeSlice& FrameModel::iso_slice(int c, int node) {
  auto key = std::make_pair(c, node);
  auto it = iso_.find(key);
  if (it != iso_.end()) return it->second;
  SliceObjective obj = [this, c, node](double e) { return iso_value_exact(c, node, e); };
  EnvelopeSlice s = build_slice(obj, batteries_[static_cast<std::size_t>(node)], pcfg_);
  if (!s.feasible) {
    Eigen::VectorXd one(1);
    one[0] = batteries_[static_cast<std::size_t>(node)];
    // Recover the binding constraint from a direct solve for the diagnostic.
    const auto& dev = class_devs_[static_cast<std::size_t>(c)][static_cast<std::size_t>(node)];
    std::vector<DeviceParams> solo{dev};
    std::vector<double> eb{one[0]};
    FrameSolution fs;
    switch (mode_) {
      case CsiMode::full_csi:
        fs = solve_frame_full_csi(eb, solo, ch_, t_frame_, scfg_);
        break;
      case CsiMode::suboptimal:
        fs = solve_frame_suboptimal(eb, solo, ch_, t_frame_, scfg_);
        break;
      case CsiMode::statistical:
        fs = solve_frame_statistical(eb, solo, ch_, t_frame_, scfg_);
        break;
    }
    if (!fs.binding.empty()) s.infeasible_reason = fs.binding;
  }
  return iso_.emplace(key, std::move(s)).first->second;
}

std::optional<double> FrameModel::iso_value_exact(int c, int node, double e) {
  auto key = std::make_tuple(c, node, bits(e));
  auto it = iso_exact_.find(key);
  if (it != iso_exact_.end()) return it->second;
  const auto& dev = class_devs_[static_cast<std::size_t>(c)][static_cast<std::size_t>(node)];
  std::optional<double> out;
  if (mode_ == CsiMode::statistical && ch_.fading != Fading::none) {
    // Alone in the frame the minimax level is just the minimum of the mean over
    // admissible slots (the window already respects the frame length), so the
    // gamma bisection collapses to one grid argmin search.
    NodeFadingPlan* plan = plan_for(c, node, e);
    if (plan->feasible()) {
      auto mm = plan->min_mean_up_to(t_frame_);
      if (mm.value <= dev.d_th) out = mm.value / dev.d_th;
    }
  } else {
    std::vector<DeviceParams> solo{dev};
    std::vector<double> eb{e};
    FrameSolution fs = mode_ == CsiMode::suboptimal
                           ? solve_frame_suboptimal(eb, solo, ch_, t_frame_, scfg_)
                           : solve_frame_full_csi(eb, solo, ch_, t_frame_, scfg_);
    if (fs.feasible) out = fs.gamma_star;
  }
  iso_exact_.emplace(key, out);
  return out;
}

double FrameModel::node_tau_at(int c, int node, double e, double gamma) {
  const auto& dev = class_devs_[static_cast<std::size_t>(c)][static_cast<std::size_t>(node)];
  if (mode_ == CsiMode::statistical && ch_.fading != Fading::none) {
    auto t = plan_for(c, node, e)->smallest_tau(gamma * dev.d_th);
    return t ? *t : kInf;
  }
  double g = ch_.mean_gain(dev.distance);
  if (mode_ == CsiMode::suboptimal && ch_.fading != Fading::none)
    g *= fading_threshold(ch_.pr_tx, ch_.fading);
  std::vector<DeviceParams> solo{dev};
  std::vector<double> eb{e};
  std::vector<double> gains{g};
  auto gf = frame_feasible_at_gamma(gamma, eb, solo, gains, ch_.w, t_frame_, scfg_);
  return gf.feasible ? gf.nodes[0].tau : kInf;
}

Eigen::VectorXd FrameModel::clamp_to_iso(int c, Eigen::VectorXd energies) {
  for (Eigen::Index j = 0; j < energies.size(); ++j) {
    const EnvelopeSlice& s = iso_slice(c, static_cast<int>(j));
    if (s.feasible && energies[j] > s.e_upper) energies[j] = s.e_upper;
  }
  return energies;
}

const FrameEval& FrameModel::eval(int c, const Eigen::VectorXd& energies,
                                  bool clamp_keys) {
  Eigen::VectorXd use = clamp_keys ? clamp_to_iso(c, energies) : energies;
  auto key = std::make_pair(c, column_key(use));
  auto it = eval_memo_.find(key);
  if (it != eval_memo_.end()) return it->second;

  FrameEval fe;
  const int N = node_count();
  if (N == 0) {
    fe.feasible = true;
    fe.gamma = 0.0;
    return eval_memo_.emplace(std::move(key), fe).first->second;
  }

  // Decoupled fast path: the frame objective is the max of single-node values when
  // the slots at that level still fit the frame. Nodes whose envelope value plus
  // fit-error margin cannot reach the hull max are never solved exactly.
  double hull_max = -kInf;
  double max_drop = 0.0;
  std::vector<double> hull_v(static_cast<std::size_t>(N));
  std::vector<double> hull_margin(static_cast<std::size_t>(N));
  bool slices_ok = true;
  for (int j = 0; j < N && slices_ok; ++j) {
    const EnvelopeSlice& s = iso_slice(c, j);
    if (!s.feasible) {
      fe.feasible = false;
      fe.gamma = kInf;
      return eval_memo_.emplace(std::move(key), fe).first->second;
    }
    double e = use[j];
    if (e < s.e_lower * (1.0 - 1e-12)) {
      hull_v[static_cast<std::size_t>(j)] = kInf;
      hull_margin[static_cast<std::size_t>(j)] = 0.0;
      hull_max = kInf;
      continue;
    }
    double drop;
    if (e >= s.e_upper) {
      drop = pcfg_.flat_tol;
    } else {
      auto nx = std::upper_bound(s.sample_e.begin(), s.sample_e.end(), e);
      std::size_t hi_i = std::min(static_cast<std::size_t>(nx - s.sample_e.begin()),
                                  s.sample_e.size() - 1);
      std::size_t lo_i = hi_i > 0 ? hi_i - 1 : 0;
      drop = s.value(s.sample_e[lo_i]) - s.value(s.sample_e[hi_i]);
    }
    hull_v[static_cast<std::size_t>(j)] = s.value(e);
    hull_margin[static_cast<std::size_t>(j)] = s.convexification_gap + drop;
    hull_max = std::max(hull_max, hull_v[static_cast<std::size_t>(j)]);
    max_drop = std::max(max_drop, drop);
  }
  (void)slices_ok;

  double gamma = 0.0;
  bool infeasible = false;
  for (int j = 0; j < N; ++j) {
    std::size_t sj = static_cast<std::size_t>(j);
    if (hull_v[sj] + hull_margin[sj] + 1e-7 < hull_max - max_drop) continue;
    auto v = iso_value_exact(c, j, use[j]);
    if (!v) {
      infeasible = true;
      break;
    }
    gamma = std::max(gamma, *v);
  }
  if (infeasible) {
    fe.feasible = false;
    fe.gamma = kInf;
    return eval_memo_.emplace(std::move(key), fe).first->second;
  }
  double tau_sum = 0.0;
  std::vector<double> taus(static_cast<std::size_t>(N), 0.0);
  for (int j = 0; j < N; ++j) {
    double t = node_tau_at(c, j, use[j], std::min(gamma, 1.0));
    if (!std::isfinite(t)) {
      tau_sum = kInf;
      break;
    }
    taus[static_cast<std::size_t>(j)] = t;
    tau_sum += t;
  }
  if (tau_sum <= pcfg_.saturation_frac * t_frame_) {
    fe.feasible = true;
    fe.gamma = gamma;
    fe.tau_total = tau_sum;
    fe.saturated = false;
    fe.taus = std::move(taus);
  } else {
    FrameSolution fs = solve_column(c, use);
    fe.feasible = fs.feasible;
    fe.gamma = fs.feasible ? fs.gamma_star : kInf;
    fe.tau_total = fs.tau_total;
    fe.saturated = !fs.feasible || fs.tau_total > pcfg_.saturation_frac * t_frame_;
    fe.taus.reserve(fs.nodes.size());
    for (const NodeAllocation& na : fs.nodes) fe.taus.push_back(na.tau);
  }
  return eval_memo_.emplace(std::move(key), fe).first->second;
}

const FrameEval& FrameModel::eval_coupled(int c, const Eigen::VectorXd& energies,
                                          bool clamp_keys) {
  Eigen::VectorXd use = clamp_keys ? clamp_to_iso(c, energies) : energies;
  auto key = std::make_pair(c, column_key(use));
  auto it = coupled_memo_.find(key);
  if (it != coupled_memo_.end()) return it->second;
  FrameSolution fs = solve_column(c, use);
  FrameEval fe;
  fe.feasible = fs.feasible;
  fe.gamma = fs.feasible ? fs.gamma_star : kInf;
  fe.tau_total = fs.tau_total;
  fe.saturated = fs.feasible && fs.tau_total > pcfg_.saturation_frac * t_frame_;
  fe.taus.reserve(fs.nodes.size());
  for (const NodeAllocation& na : fs.nodes) fe.taus.push_back(na.tau);
  return coupled_memo_.emplace(std::move(key), fe).first->second;
}

FrameSolution FrameModel::solve_detail(int c, const Eigen::VectorXd& energies) {
  return solve_column(c, energies);
}

EnvelopeSlice FrameModel::build_true_slice(int c, int node,
                                           const Eigen::VectorXd& energies) {
  // Rebuild slices steer the water-filling inside saturated frames only; exact
  // evaluation happens afterwards, so coarser sampling is enough here.
  PlannerConfig light = pcfg_;
  light.envelope_samples = std::min(pcfg_.envelope_samples, 24);
  light.slice_e_tol = std::max(pcfg_.slice_e_tol, 1e-4);
  if (mode_ == CsiMode::statistical && ch_.fading != Fading::none) {
    // Coupled statistical solves are costly; freeze the other nodes' slots at the
    // current column and let this node optimize its mean over the residual frame
    // time. One coupled solve per column, single-node searches per sample.
    const FrameEval& fe = eval_coupled(c, energies, false);
    if (fe.feasible && fe.taus.size() == static_cast<std::size_t>(node_count())) {
      double t_eff =
          t_frame_ - (fe.tau_total - fe.taus[static_cast<std::size_t>(node)]);
      const DeviceParams& dev =
          class_devs_[static_cast<std::size_t>(c)][static_cast<std::size_t>(node)];
      SliceObjective obj = [this, c, node, t_eff,
                            &dev](double e) -> std::optional<double> {
        NodeFadingPlan* plan = plan_for(c, node, e);
        if (!plan->feasible()) return std::nullopt;
        // In a saturated frame the binding node's slot equals its window start, so
        // t_eff can round below the first grid slot; clamp rather than report the
        // sample infeasible. The slice only steers, exact evals certify the result.
        auto mm = plan->min_mean_up_to(std::max(t_eff, plan->tau_low()));
        if (!(mm.value <= dev.d_th)) return std::nullopt;
        return mm.value / dev.d_th;
      };
      return build_slice(obj, batteries_[static_cast<std::size_t>(node)], light);
    }
  }
  SliceObjective obj = [this, c, node, energies](double e) -> std::optional<double> {
    Eigen::VectorXd col = energies;
    col[node] = e;
    FrameSolution fs = solve_column(c, col);
    if (!fs.feasible) return std::nullopt;
    return fs.gamma_star;
  };
  return build_slice(obj, batteries_[static_cast<std::size_t>(node)], light);
}

namespace {

enum class RunState { ok, need_rebuild, infeasible };

struct RunOutcome {
  RunState state = RunState::infeasible;
  std::string reason;
};

RunOutcome run_alternate(FrameModel& model, long n, Rng& rng, bool rebuild,
                         EnergySchedule& out, std::ostream* trace) {
  const PlannerConfig& cfg = model.planner_config();
  const int N = model.node_count();
  const int C = model.class_count();
  std::vector<int> cls(static_cast<std::size_t>(n));
  for (long k = 0; k < n; ++k) cls[static_cast<std::size_t>(k)] = model.class_of_frame(k);

  // Every class that appears must have feasible per-node slices, and the battery
  // must fund the per-frame floors: both are exact infeasibility certificates. The
  // slice pointers are prefetched once; map lookups stay out of the frame loops.
  std::vector<const EnvelopeSlice*> sl(static_cast<std::size_t>(C * N), nullptr);
  std::vector<char> present(static_cast<std::size_t>(C), 0);
  for (long k = 0; k < n; ++k) present[static_cast<std::size_t>(cls[static_cast<std::size_t>(k)])] = 1;
  for (int c = 0; c < C; ++c) {
    if (!present[static_cast<std::size_t>(c)]) continue;
    for (int j = 0; j < N; ++j) {
      const EnvelopeSlice& s = model.iso_slice(c, j);
      if (!s.feasible)
        return {RunState::infeasible,
                "node " + std::to_string(model.class_devices(c)[static_cast<std::size_t>(j)].id) +
                    ": " + s.infeasible_reason};
      sl[static_cast<std::size_t>(c * N + j)] = &s;
    }
  }
  auto slice_of = [&](int c, int j) -> const EnvelopeSlice& {
    return *sl[static_cast<std::size_t>(c * N + j)];
  };
  for (int j = 0; j < N; ++j) {
    double floor_sum = 0.0;
    for (long k = 0; k < n; ++k)
      floor_sum += slice_of(cls[static_cast<std::size_t>(k)], j).e_lower;
    if (floor_sum > model.battery(j))
      return {RunState::infeasible,
              "node " + std::to_string(model.class_devices(0)[static_cast<std::size_t>(j)].id) +
                  ": battery cannot fund the minimum energy of every frame"};
  }

  // Initial point: equal split of the spendable energy, repaired to the floors by
  // draining the slack frames proportionally.
  Eigen::MatrixXd E(N, n);
  for (int j = 0; j < N; ++j) {
    double up_sum = 0.0;
    for (long k = 0; k < n; ++k)
      up_sum += slice_of(cls[static_cast<std::size_t>(k)], j).e_upper;
    double target = std::min(model.battery(j), up_sum);
    double equal = target / static_cast<double>(n);
    double deficit = 0.0, slack = 0.0;
    for (long k = 0; k < n; ++k) {
      double flo = slice_of(cls[static_cast<std::size_t>(k)], j).e_lower;
      if (equal < flo)
        deficit += flo - equal;
      else
        slack += equal - flo;
    }
    if (deficit > slack)
      return {RunState::infeasible,
              "node " + std::to_string(model.class_devices(0)[static_cast<std::size_t>(j)].id) +
                  ": equal-split repair cannot reach the per-frame floors"};
    for (long k = 0; k < n; ++k) {
      double flo = slice_of(cls[static_cast<std::size_t>(k)], j).e_lower;
      double e = equal;
      if (equal < flo)
        e = flo;
      else if (deficit > 0.0)
        e = equal - deficit * (equal - flo) / slack;
      E(j, static_cast<Eigen::Index>(k)) = e;
    }
  }

  // Columns rarely change between evaluations (plateau frames collapse after
  // clamping), so cache the last evaluation per frame keyed on the raw column.
  Eigen::MatrixXd e_seen(N, n);
  std::vector<FrameEval> fcache(static_cast<std::size_t>(n));
  std::vector<char> fvalid(static_cast<std::size_t>(n), 0);
  auto eval_frame = [&](long k) -> const FrameEval& {
    std::size_t sk = static_cast<std::size_t>(k);
    Eigen::Index ek = static_cast<Eigen::Index>(k);
    if (fvalid[sk]) {
      bool same = true;
      for (int j = 0; j < N; ++j)
        if (E(j, ek) != e_seen(j, ek)) {
          same = false;
          break;
        }
      if (same) return fcache[sk];
    }
    fcache[sk] = model.eval(cls[sk], E.col(ek), !rebuild);
    e_seen.col(ek) = E.col(ek);
    fvalid[sk] = 1;
    return fcache[sk];
  };

  if (!rebuild) {
    // Saturation or coupled infeasibility at the initial point sends the run to
    // rebuild mode before any sweep.
    for (long k = 0; k < n; ++k) {
      const FrameEval& fe = eval_frame(k);
      if (!fe.feasible || fe.saturated)
        return {RunState::need_rebuild, "initial point saturates frame " + std::to_string(k)};
    }
  }

  double d_prev = kInf;
  std::vector<double> d_trace;
  int sweeps_done = 0;
  std::vector<EnvelopeSlice> true_slices(static_cast<std::size_t>(n));
  std::vector<FrameSliceRef> refs(static_cast<std::size_t>(n));

  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    Eigen::MatrixXd backup = E;
    int tries = 0;
    double d_new = 0.0;
    while (true) {
      bool column_infeasible = false;
      bool saturated_seen = false;
      std::string why;
      for (int l = 0; l < N && !column_infeasible; ++l) {
        for (long k = 0; k < n; ++k) {
          std::size_t sk = static_cast<std::size_t>(k);
          int c = cls[sk];
          if (rebuild) {
            true_slices[sk] = model.build_true_slice(c, l, E.col(static_cast<Eigen::Index>(k)));
            if (!true_slices[sk].feasible) {
              column_infeasible = true;
              why = "frame " + std::to_string(k) + ": " + true_slices[sk].infeasible_reason;
              break;
            }
            refs[sk] = {&true_slices[sk], -kInf};
          } else {
            const EnvelopeSlice& s = slice_of(c, l);
            double cut = -kInf;
            for (int j = 0; j < N; ++j) {
              if (j == l) continue;
              cut = std::max(cut, slice_of(c, j).value(E(j, static_cast<Eigen::Index>(k))));
            }
            // Cutting inside the flatness band is numerical noise: drop it.
            if (cut <= s.floor_value + 10.0 * cfg.flat_tol) cut = -kInf;
            refs[sk] = {&s, cut};
          }
        }
        if (column_infeasible) break;
        WaterFillResult wf = water_fill(refs, model.battery(l));
        if (!wf.feasible) {
          column_infeasible = true;
          why = "node " + std::to_string(model.class_devices(0)[static_cast<std::size_t>(l)].id) +
                ": " + wf.infeasible_reason;
          break;
        }
        E.row(l) = wf.energy.transpose();
        double spent = wf.energy.sum();
        double residual = model.battery(l) - spent;
        if (residual > 0.0) {
          std::vector<long> flat;
          for (long k = 0; k < n; ++k)
            if (wf.at_upper[static_cast<std::size_t>(k)]) flat.push_back(k);
          if (!flat.empty()) {
            std::vector<double> draw(flat.size());
            double sum = 0.0;
            for (std::size_t i = 0; i < flat.size(); ++i) {
              draw[i] = rng.next_exponential();
              sum += draw[i];
            }
            for (std::size_t i = 0; i < flat.size(); ++i)
              E(l, static_cast<Eigen::Index>(flat[i])) += residual * draw[i] / sum;
          }
        }
      }
      if (column_infeasible) {
        if (!rebuild) return {RunState::need_rebuild, why};
        return {RunState::infeasible, why};
      }

      double dsum = 0.0;
      bool infeasible_col = false;
      for (long k = 0; k < n; ++k) {
        const FrameEval& fe = eval_frame(k);
        if (!fe.feasible) {
          infeasible_col = true;
          break;
        }
        dsum += fe.gamma;
        saturated_seen = saturated_seen || fe.saturated;
      }
      if (infeasible_col) {
        if (!rebuild) return {RunState::need_rebuild, "post-sweep column infeasible"};
        return {RunState::infeasible, "post-sweep column infeasible"};
      }
      if (saturated_seen && !rebuild)
        return {RunState::need_rebuild, "sweep saturated a frame"};
      d_new = dsum / static_cast<double>(n);

      if (d_new > d_prev + 1e-12) {
        // Surrogate error produced a non-descending step; retry the sweep with
        // fresh randomization, then settle for the previous point.
        if (tries < cfg.redistribution_retries) {
          ++tries;
          E = backup;
          continue;
        }
        E = backup;
        d_new = d_prev;
      }
      break;
    }
    if (d_new == d_prev && sweeps_done > 0) {
      // Reverted sweep: converged at the previous point.
      break;
    }
    sweeps_done = sweep;
    d_trace.push_back(d_new);
    if (trace)
      (*trace) << "n=" << n << " sweep=" << sweep << " d_mean=" << d_new << "\n";
    if (std::isfinite(d_prev) &&
        d_prev - d_new <= cfg.conv_tol * std::max(std::abs(d_prev), 1e-12)) {
      d_prev = d_new;
      break;
    }
    d_prev = d_new;
  }

  // The random shares accumulate rounding; trim the dust from the fullest frame so
  // every battery holds exactly.
  for (int j = 0; j < N; ++j) {
    double sum = 0.0, comp = 0.0;
    for (long k = 0; k < n; ++k) {
      double y = E(j, static_cast<Eigen::Index>(k)) - comp;
      double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    double excess = sum - model.battery(j);
    if (excess > 0.0) {
      Eigen::Index kmax = 0;
      E.row(j).maxCoeff(&kmax);
      E(j, kmax) -= excess;
    }
  }

  out.n = n;
  out.energy = E;
  out.saturated = rebuild;
  out.sweeps = sweeps_done;
  out.d_mean_trace = d_trace;
  out.frame_gamma = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  out.frame_tau = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  double dsum = 0.0;
  for (long k = 0; k < n; ++k) {
    const FrameEval& fe = eval_frame(k);
    if (!fe.feasible)
      return {RunState::infeasible, "frame " + std::to_string(k) + " infeasible after trim"};
    out.frame_gamma[static_cast<Eigen::Index>(k)] = fe.gamma;
    out.frame_tau[static_cast<Eigen::Index>(k)] = fe.tau_total;
    dsum += fe.gamma;
  }
  out.d_mean = dsum / static_cast<double>(n);
  out.feasible = true;
  return {RunState::ok, ""};
}

}  // namespace

EnergySchedule random_alternate(FrameModel& model, long n, Rng& rng,
                                std::ostream* trace) {
  EnergySchedule out;
  out.n = n;
  if (n < 1) {
    out.infeasible_reason = "lifetime must be at least one frame";
    return out;
  }
  RunOutcome oc = run_alternate(model, n, rng, false, out, trace);
  if (oc.state == RunState::need_rebuild) {
    if (trace) (*trace) << "n=" << n << " restarting with coupled slices: " << oc.reason << "\n";
    oc = run_alternate(model, n, rng, true, out, trace);
  }
  if (oc.state != RunState::ok) {
    out.feasible = false;
    out.infeasible_reason = oc.reason;
    return out;
  }
  return out;
}

SweepResult tradeoff_sweep(FrameModel& model, std::span<const double> sigmas,
                           std::uint64_t master_seed, std::ostream* trace) {
  SweepResult res;
  const PlannerConfig& cfg = model.planner_config();
  for (long n = 1; n <= cfg.n_cap; ++n) {
    Rng rng = Rng::stream(master_seed, "eap", static_cast<std::uint64_t>(n));
    EnergySchedule sched = random_alternate(model, n, rng, trace);
    if (!sched.feasible) {
      res.stop_reason = "n=" + std::to_string(n) + ": " + sched.infeasible_reason;
      break;
    }
    TradeoffRow row;
    row.n = n;
    row.d_mean = sched.d_mean;
    row.tau_min = sched.frame_tau.minCoeff();
    row.tau_mean = sched.frame_tau.mean();
    row.tau_max = sched.frame_tau.maxCoeff();
    row.saturated = sched.saturated;
    row.sweeps = sched.sweeps;
    res.rows.push_back(row);
    if (n == cfg.n_cap) res.stop_reason = "lifetime cap reached";
  }
  res.feasible = !res.rows.empty();
  for (double sigma : sigmas) {
    SweepBest best;
    best.sigma = sigma;
    best.n = 0;
    best.objective = kInf;
    for (const TradeoffRow& row : res.rows) {
      double life = cfg.lifetime_value ? cfg.lifetime_value(row.n)
                                       : static_cast<double>(row.n);
      double obj = sigma * row.d_mean - (1.0 - sigma) * life;
      if (obj < best.objective) {
        best.objective = obj;
        best.n = row.n;
      }
    }
    res.best.push_back(best);
  }
  return res;
}

EnergySchedule materialize_schedule(FrameModel& model, long n,
                                    std::uint64_t master_seed) {
  Rng rng = Rng::stream(master_seed, "eap", static_cast<std::uint64_t>(n));
  EnergySchedule sched = random_alternate(model, n, rng, nullptr);
  if (!sched.feasible) return sched;
  // Recorded per-frame values come from full coupled solves so they stand alone.
  double dsum = 0.0;
  for (long k = 0; k < n; ++k) {
    int c = model.class_of_frame(k);
    const FrameEval& fe =
        model.eval_coupled(c, sched.energy.col(static_cast<Eigen::Index>(k)), !sched.saturated);
    sched.frame_gamma[static_cast<Eigen::Index>(k)] = fe.gamma;
    sched.frame_tau[static_cast<Eigen::Index>(k)] = fe.tau_total;
    dsum += fe.gamma;
  }
  sched.d_mean = dsum / static_cast<double>(n);
  return sched;
}

}  // namespace edt
