#include "edt/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>

#include "edt/csvio.hpp"
#include "edt/fading_solver.hpp"
#include "edt/frame_solver.hpp"

namespace edt {

namespace {

std::string join_path(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

// Transmissions must fit every frame, so admission sees the largest payload the
// zeta pattern ever produces.
std::vector<DeviceParams> admission_view(const Scenario& sc) {
  std::vector<DeviceParams> devs = sc.devices;
  if (!sc.zeta_pattern.empty()) {
    double zmax = *std::max_element(sc.zeta_pattern.begin(), sc.zeta_pattern.end());
    for (DeviceParams& d : devs) d.l0 *= zmax;
  }
  return devs;
}

AdmissionResult admit(std::span<const DeviceParams> devs, const ChannelModel& ch,
                      double t_frame, CsiMode mode, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "admission");
  return dismiss(devs, ch, t_frame, mode, rng);
}

// Ids are assigned by position at load time, so they index the scenario arrays.
std::vector<DeviceParams> pick_devices(const Scenario& sc,
                                       const std::vector<int>& ids) {
  std::vector<DeviceParams> out;
  for (int id : ids) out.push_back(sc.devices[static_cast<std::size_t>(id)]);
  return out;
}

std::vector<double> pick_batteries(const Scenario& sc, const std::vector<int>& ids) {
  std::vector<double> out;
  for (int id : ids) out.push_back(sc.batteries[static_cast<std::size_t>(id)]);
  return out;
}

void log_notices(const Scenario& sc, const ExperimentOptions& opts) {
  if (!opts.log) return;
  for (const std::string& n : sc.notices) *opts.log << "notice: " << n << "\n";
}

double objective_of(const PlannerConfig& cfg, double sigma, const TradeoffRow& r) {
  double life = cfg.lifetime_value ? cfg.lifetime_value(r.n)
                                   : static_cast<double>(r.n);
  return sigma * r.d_mean - (1.0 - sigma) * life;
}

}  // namespace

ExperimentOptions options_from(const Scenario& sc) {
  ExperimentOptions o;
  o.mode = sc.mode;
  o.sigmas = sc.sigmas;
  o.seed = sc.seed;
  return o;
}

ExperimentResult run_experiment(const Scenario& sc, const ExperimentOptions& opts) {
  if (opts.sigmas.empty()) throw std::domain_error("sigma list must not be empty");
  ExperimentResult out;
  log_notices(sc, opts);

  out.admission =
      admit(admission_view(sc), sc.channel, sc.t_frame, opts.mode, opts.seed);
  if (out.admission.admitted.empty()) {
    out.message = "admission dismissed every node: frame too short for any payload";
    return out;
  }

  FrameModel model(opts.mode, pick_devices(sc, out.admission.admitted), sc.channel,
                   sc.t_frame, sc.zeta_pattern,
                   pick_batteries(sc, out.admission.admitted), sc.solver, sc.planner);
  out.sweep =
      tradeoff_sweep(model, opts.sigmas, opts.seed, opts.verbose ? opts.log : nullptr);
  if (out.sweep.rows.empty()) {
    out.message = out.sweep.stop_reason;
    return out;
  }
  out.feasible = true;
  out.message = out.sweep.stop_reason;

  if (opts.verbose && opts.log) {
    for (int c = 0; c < model.class_count(); ++c)
      for (int j = 0; j < model.node_count(); ++j) {
        const EnvelopeSlice& s = model.iso_slice(c, j);
        if (s.feasible)
          *opts.log << "slice class " << c << " node " << j
                    << " convexification gap " << csv_format(s.convexification_gap)
                    << "\n";
      }
  }

  std::filesystem::create_directories(opts.out_dir);
  {
    std::vector<std::string> hdr{"n", "d_mean"};
    for (double s : opts.sigmas) hdr.push_back("objective_s" + csv_format(s));
    CsvWriter w(join_path(opts.out_dir, "tradeoff.csv"), hdr);
    for (const TradeoffRow& r : out.sweep.rows) {
      w.cell(r.n).cell(r.d_mean);
      for (double s : opts.sigmas) w.cell(objective_of(model.planner_config(), s, r));
      w.end_row();
    }
    out.files.push_back(w.path());
  }
  {
    CsvWriter w(join_path(opts.out_dir, "tau.csv"),
                {"n", "tau_min", "tau_mean", "tau_max"});
    for (const TradeoffRow& r : out.sweep.rows) {
      w.cell(r.n).cell(r.tau_min).cell(r.tau_mean).cell(r.tau_max);
      w.end_row();
    }
    out.files.push_back(w.path());
  }
  // Per-state distortion of the realized policy in the first frame of the best
  // schedule (first sigma). Under fading the policy is a curve over admissible
  // states; the other modes plan against a single effective gain, one row each.
  {
    const SweepBest& b = out.sweep.best.front();
    EnergySchedule es = materialize_schedule(model, b.n, opts.seed);
    if (es.feasible) {
      int c0 = model.class_of_frame(0);
      FrameSolution fs = model.solve_detail(c0, es.energy.col(0));
      CsvWriter w(join_path(opts.out_dir, "delta_policy.csv"),
                  {"node", "theta", "delta"});
      for (const NodeAllocation& na : fs.nodes) {
        if (na.policy) {
          const PowerPolicy& pp = *na.policy;
          const int samples = 64;
          for (int i = 0; i <= samples; ++i) {
            double th =
                pp.theta_tx + (pp.theta_cap - pp.theta_tx) * i / samples;
            auto d = realized_distortion(th, pp.tau, pp.e_budget, pp.dev, pp.h0,
                                         pp.w, model.solver_config());
            if (!d) continue;  // cannot happen for a feasible policy's own budget
            w.cell(static_cast<long>(na.id)).cell(th).cell(*d);
            w.end_row();
          }
        } else {
          double th = opts.mode == CsiMode::suboptimal
                          ? fading_threshold(sc.channel.pr_tx, sc.channel.fading)
                          : 1.0;
          w.cell(static_cast<long>(na.id)).cell(th).cell(na.distortion);
          w.end_row();
        }
      }
      out.files.push_back(w.path());
    }
  }
  return out;
}

ExperimentResult sweep_dismissal(const Scenario& sc, const ExperimentOptions& opts) {
  ExperimentResult out;
  log_notices(sc, opts);
  std::vector<double> grid = sc.t_sweep;
  if (grid.empty()) grid = {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0};
  std::vector<DeviceParams> devs = admission_view(sc);

  std::filesystem::create_directories(opts.out_dir);
  CsvWriter w(join_path(opts.out_dir, "dismissal.csv"),
              {"t_frame", "dismissed", "admitted"});
  for (double t : grid) {
    AdmissionResult ar = admit(devs, sc.channel, t, opts.mode, opts.seed);
    w.cell(t)
        .cell(static_cast<long>(ar.dismissed.size()))
        .cell(static_cast<long>(ar.admitted.size()));
    w.end_row();
    if (out.admission.admitted.empty() && !ar.admitted.empty())
      out.admission = ar;  // keep one representative result for callers
  }
  out.files.push_back(w.path());
  out.feasible = true;
  return out;
}

ExperimentResult sweep_sensitivity(const Scenario& sc, const ExperimentOptions& opts) {
  if (opts.sigmas.empty()) throw std::domain_error("sigma list must not be empty");
  ExperimentResult out;
  log_notices(sc, opts);
  std::vector<double> grid = sc.alpha_sweep;
  if (grid.empty()) grid = {0.0, 25e-9, 50e-9, 100e-9, 200e-9};

  std::filesystem::create_directories(opts.out_dir);
  CsvWriter w(join_path(opts.out_dir, "sensitivity.csv"), {"alpha", "n", "d_mean"});
  std::string last_reason;
  for (double alpha : grid) {
    Scenario s2 = sc;
    for (DeviceParams& d : s2.devices) d.compression.e0_alpha = alpha;
    AdmissionResult ar =
        admit(admission_view(s2), s2.channel, s2.t_frame, opts.mode, opts.seed);
    if (ar.admitted.empty()) {
      last_reason = "admission dismissed every node";
      continue;
    }
    FrameModel model(opts.mode, pick_devices(s2, ar.admitted), s2.channel,
                     s2.t_frame, s2.zeta_pattern, pick_batteries(s2, ar.admitted),
                     s2.solver, s2.planner);
    SweepResult sr = tradeoff_sweep(model, opts.sigmas, opts.seed,
                                    opts.verbose ? opts.log : nullptr);
    for (const TradeoffRow& r : sr.rows) {
      w.cell(alpha).cell(r.n).cell(r.d_mean);
      w.end_row();
    }
    if (!sr.rows.empty())
      out.feasible = true;
    else
      last_reason = sr.stop_reason;
  }
  out.files.push_back(w.path());
  if (!out.feasible) out.message = last_reason;
  return out;
}

FrameReport solve_frame_report(const Scenario& sc, std::span<const double> energies,
                               CsiMode mode, std::uint64_t seed) {
  if (energies.size() != sc.devices.size())
    throw std::domain_error("energies length must match the device count");
  FrameReport rep;
  // Single-frame inspection: payloads as written, no zeta scaling.
  rep.admission = admit(sc.devices, sc.channel, sc.t_frame, mode, seed);
  rep.admitted = pick_devices(sc, rep.admission.admitted);
  std::vector<double> e;
  for (int id : rep.admission.admitted)
    e.push_back(energies[static_cast<std::size_t>(id)]);

  if (rep.admitted.empty()) {
    rep.solution.binding = "admission dismissed every node";
  } else {
    switch (mode) {
      case CsiMode::full_csi:
        rep.solution =
            solve_frame_full_csi(e, rep.admitted, sc.channel, sc.t_frame, sc.solver);
        break;
      case CsiMode::statistical:
        rep.solution = solve_frame_statistical(e, rep.admitted, sc.channel,
                                               sc.t_frame, sc.solver);
        break;
      case CsiMode::suboptimal:
        rep.solution = solve_frame_suboptimal(e, rep.admitted, sc.channel,
                                              sc.t_frame, sc.solver);
        break;
    }
  }
  rep.solution.dismissed = rep.admission.dismissed;
  return rep;
}

}  // namespace edt
