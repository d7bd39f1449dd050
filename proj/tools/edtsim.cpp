// Command-line front end: scenario-driven lifetime sweeps and one-frame solves.
// Exit status: 0 success, 1 infeasible scenario, 2 configuration error.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edt/csvio.hpp"
#include "edt/experiment.hpp"

namespace {

using namespace edt;

struct CommonArgs {
  std::string config;
  std::string mode;
  std::vector<double> sigmas;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out = ".";
  bool verbose = false;
};

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--config", a.config, "scenario file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--mode", a.mode, "full_csi | statistical | suboptimal");
  sub->add_option("--sigma", a.sigmas, "tradeoff weight in [0, 1], repeatable");
  sub->add_option_function<std::uint64_t>(
         "--seed",
         [&a](std::uint64_t v) {
           a.seed = v;
           a.seed_given = true;
         },
         "master RNG seed");
  sub->add_option("--out", a.out, "output directory for CSV artifacts");
  sub->add_flag("--verbose", a.verbose, "sweep and slice diagnostics on stderr");
}

ExperimentOptions resolve(const Scenario& sc, const CommonArgs& a) {
  ExperimentOptions o = options_from(sc);
  if (!a.mode.empty()) o.mode = mode_from_string(a.mode);
  if (!a.sigmas.empty()) o.sigmas = a.sigmas;
  if (a.seed_given) o.seed = a.seed;
  o.out_dir = a.out;
  o.verbose = a.verbose;
  o.log = &std::cerr;
  return o;
}

int finish(const ExperimentResult& r) {
  for (const std::string& f : r.files) std::printf("wrote %s\n", f.c_str());
  if (!r.feasible) {
    std::fprintf(stderr, "infeasible: %s\n", r.message.c_str());
    return 1;
  }
  return 0;
}

int cmd_run(const CommonArgs& a) {
  Scenario sc = load_scenario(a.config);
  ExperimentOptions opts = resolve(sc, a);
  ExperimentResult r = run_experiment(sc, opts);
  if (!r.admission.dismissed.empty()) {
    std::printf("dismissed %zu node(s):", r.admission.dismissed.size());
    for (int id : r.admission.dismissed) std::printf(" %d", id);
    std::printf("\n");
  }
  if (r.feasible) {
    std::printf("scenario %s, mode %s: %zu feasible lifetimes (%s)\n",
                sc.name.c_str(), to_string(opts.mode).c_str(), r.sweep.rows.size(),
                r.message.c_str());
    for (const SweepBest& b : r.sweep.best)
      std::printf("sigma %s: best n=%ld objective %s\n", csv_format(b.sigma).c_str(),
                  b.n, csv_format(b.objective).c_str());
  }
  return finish(r);
}

int cmd_sweep_dismissal(const CommonArgs& a) {
  Scenario sc = load_scenario(a.config);
  return finish(sweep_dismissal(sc, resolve(sc, a)));
}

int cmd_sweep_sensitivity(const CommonArgs& a) {
  Scenario sc = load_scenario(a.config);
  return finish(sweep_sensitivity(sc, resolve(sc, a)));
}

int cmd_solve_frame(const CommonArgs& a, const std::vector<double>& energies,
                    bool csv) {
  Scenario sc = load_scenario(a.config);
  ExperimentOptions opts = resolve(sc, a);
  for (const std::string& n : sc.notices) std::cerr << "notice: " << n << "\n";
  FrameReport rep = solve_frame_report(sc, energies, opts.mode, opts.seed);
  const FrameSolution& fs = rep.solution;
  if (!fs.feasible) {
    std::fprintf(stderr, "infeasible: %s\n", fs.binding.c_str());
    return 1;
  }
  if (csv) {
    std::printf("node,tau,power,l_bits,distortion,e_used,gamma_star\n");
    for (const NodeAllocation& na : fs.nodes)
      std::printf("%d,%s,%s,%s,%s,%s,%s\n", na.id, csv_format(na.tau).c_str(),
                  csv_format(na.power).c_str(), csv_format(na.l_bits).c_str(),
                  csv_format(na.distortion).c_str(), csv_format(na.e_used).c_str(),
                  csv_format(fs.gamma_star).c_str());
    return 0;
  }
  std::printf("gamma* = %s  (sum tau %s of %s s)\n", csv_format(fs.gamma_star).c_str(),
              csv_format(fs.tau_total).c_str(), csv_format(sc.t_frame).c_str());
  if (!fs.dismissed.empty()) {
    std::printf("dismissed:");
    for (int id : fs.dismissed) std::printf(" %d", id);
    std::printf("\n");
  }
  std::printf("%4s %14s %12s %14s %14s %12s\n", "node", "tau_s", "power_W",
              "payload_bits", "distortion", "e_used_J");
  for (const NodeAllocation& na : fs.nodes)
    std::printf("%4d %14.6g %12.6g %14.6g %14.6g %12.6g\n", na.id, na.tau, na.power,
                na.l_bits, na.distortion, na.e_used);
  return 0;
}

int cmd_catalog() {
  for (const std::string& name : catalog_names()) {
    if (name == "rn131c" || name == "rc2400hp") {
      RadioParams r = catalog_radio(name);
      std::printf("%-9s radio: p_min %g W, p_max %g W, eta_a %g, circuitry %g W, "
                  "wakeup %g J\n",
                  name.c_str(), r.p_min, r.p_max, r.eta_a, r.e_c_rate, r.beta_const);
    } else {
      DeviceParams d = catalog_device(name);
      std::printf("%-9s device: distance %g m, payload %g bits, d_th %g, priority "
                  "%d, battery %g J, p_max %g W\n",
                  name.c_str(), d.distance, d.l0, d.d_th, d.priority, d.b0,
                  d.radio.p_max);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distortion/lifetime scheduling simulator for battery-powered TDMA "
               "sensor networks"};
  app.require_subcommand(1);

  CommonArgs run_args;
  CLI::App* run = app.add_subcommand("run", "lifetime sweep: tradeoff/tau/policy CSVs");
  add_common(run, run_args);

  CommonArgs frame_args;
  std::vector<double> energies;
  bool frame_csv = false;
  CLI::App* frame =
      app.add_subcommand("solve-frame", "single-frame solve at explicit energies");
  add_common(frame, frame_args);
  frame->add_option("--energy", energies, "per-node frame energy in J, repeatable")
      ->required();
  frame->add_flag("--csv", frame_csv, "machine-readable output");

  CommonArgs dis_args;
  CLI::App* dis = app.add_subcommand("sweep-dismissal",
                                     "admission counts across frame lengths");
  add_common(dis, dis_args);

  CommonArgs sen_args;
  CLI::App* sen = app.add_subcommand("sweep-sensitivity",
                                     "lifetime sweeps across processing slopes");
  add_common(sen, sen_args);

  CLI::App* cat = app.add_subcommand("catalog", "print the built-in device catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_args);
    if (frame->parsed()) return cmd_solve_frame(frame_args, energies, frame_csv);
    if (dis->parsed()) return cmd_sweep_dismissal(dis_args);
    if (sen->parsed()) return cmd_sweep_sensitivity(sen_args);
    if (cat->parsed()) return cmd_catalog();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
