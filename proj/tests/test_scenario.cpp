#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "edt/csvio.hpp"
#include "edt/experiment.hpp"
#include "edt/scenario.hpp"

using namespace edt;

namespace {

const char* kSmallDoc = R"({
  "schema_version": 1,
  "name": "parse_check",
  "channel": {
    "bandwidth_hz": 5e6,
    "noise_density_dbm_hz": -167,
    "path_loss_exp": 3.5,
    "fading": "rayleigh",
    "pr_tx": 0.2
  },
  "devices": [
    {"group": "g1", "battery": 0.12},
    {"group": "g2", "battery": 0.08},
    {"group": "g3", "battery": 0.005}
  ],
  "t_frame": 1.0,
  "run": {"mode": "full_csi", "sigma": [0.5], "seed": 42}
})";

template <class F>
void fails_mentioning(F&& fn, const std::string& needle) {
  try {
    fn();
    FAIL_CHECK("expected a domain_error mentioning \"" << needle << "\"");
  } catch (const std::domain_error& e) {
    CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos,
                  "message \"" << e.what() << "\" does not mention \"" << needle
                               << "\"");
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("a templated scenario resolves groups, batteries and the channel") {
  Scenario sc = parse_scenario(kSmallDoc, "test");
  CHECK(sc.name == "parse_check");
  REQUIRE(sc.devices.size() == 3);
  CHECK(sc.devices[0].id == 0);
  CHECK(sc.devices[0].l0 == 2e6);
  CHECK(sc.devices[0].b0 == 0.12);
  CHECK(sc.devices[2].radio.p_max == doctest::Approx(0.10715).epsilon(1e-12));
  REQUIRE(sc.batteries.size() == 3);
  CHECK(sc.batteries[1] == 0.08);
  CHECK(sc.channel.w == 5e6);
  // -167 dBm/Hz is 10^-19.7 W/Hz
  CHECK(sc.channel.n0 ==
        doctest::Approx(std::pow(10.0, -19.7)).epsilon(1e-12));
  CHECK(sc.channel.pr_tx == 0.2);
  CHECK(sc.mode == CsiMode::full_csi);
  CHECK(sc.seed == 42);
  CHECK(sc.t_frame == 1.0);
  CHECK(sc.notices.empty());
}

TEST_CASE("a scenario without t_frame defaults to one second with a notice") {
  std::string doc = R"({
    "schema_version": 1,
    "channel": {"bandwidth_hz": 5e6, "noise_density_dbm_hz": -167,
                "path_loss_exp": 3.5, "fading": "rayleigh", "pr_tx": 0.6},
    "devices": [{"group": "g3", "battery": 1.0}]
  })";
  Scenario sc = parse_scenario(doc, "test");
  CHECK(sc.t_frame == 1.0);
  REQUIRE(!sc.notices.empty());
  CHECK(sc.notices[0].find("t_frame") != std::string::npos);
  // run defaults survive an absent run section
  CHECK(sc.mode == CsiMode::statistical);
  CHECK(sc.sigmas == std::vector<double>{0.5});
}

TEST_CASE("schema violations name the offending key") {
  fails_mentioning([] { parse_scenario("{", "test"); }, "test");
  fails_mentioning([] { parse_scenario(R"({"schema_version": 2})", "t"); },
                   "schema_version");
  fails_mentioning(
      [] {
        parse_scenario(R"({"schema_version": 1, "chanel": {}})", "t");
      },
      "chanel");
  std::string base = R"({
    "schema_version": 1,
    "channel": {"bandwidth_hz": 5e6, "noise_density_dbm_hz": -167,
                "path_loss_exp": 3.5, "fading": "rayleigh", "pr_tx": 0.6},
    "devices": [{"group": "g3", "battery": 1.0}]
  })";
  // a device without template or battery
  fails_mentioning(
      [] {
        parse_scenario(R"({
          "schema_version": 1,
          "channel": {"bandwidth_hz": 5e6, "noise_density_dbm_hz": -167,
                      "path_loss_exp": 3.5, "fading": "rayleigh", "pr_tx": 0.6},
          "devices": [{"distance": 10, "l0": 1e5, "d_th": 5}]
        })",
                       "t");
      },
      "battery");
  // sigma outside [0, 1]
  fails_mentioning(
      [] {
        parse_scenario(R"({
          "schema_version": 1,
          "channel": {"bandwidth_hz": 5e6, "noise_density_dbm_hz": -167,
                      "path_loss_exp": 3.5, "fading": "rayleigh", "pr_tx": 0.6},
          "devices": [{"group": "g3", "battery": 1.0}],
          "run": {"sigma": [1.5]}
        })",
                       "t");
      },
      "sigma");
  // unknown fading label
  fails_mentioning(
      [] {
        parse_scenario(R"({
          "schema_version": 1,
          "channel": {"bandwidth_hz": 5e6, "noise_density_dbm_hz": -167,
                      "path_loss_exp": 3.5, "fading": "rician", "pr_tx": 0.6},
          "devices": [{"group": "g3", "battery": 1.0}]
        })",
                       "t");
      },
      "rician");
  CHECK_NOTHROW(parse_scenario(base, "t"));
}

TEST_CASE("an inline device overrides a group template field by field") {
  std::string doc = R"({
    "schema_version": 1,
    "channel": {"bandwidth_hz": 5e6, "noise_density_dbm_hz": -167,
                "path_loss_exp": 3.5, "fading": "rayleigh", "pr_tx": 0.6},
    "groups": {
      "near": {"group": "g1", "distance": 2.0, "battery": 3.0}
    },
    "devices": [
      {"group": "near"},
      {"group": "near", "d_th": 12.0, "priority": 4},
      {"distance": 50, "l0": 2e5, "d_th": 6, "battery": 1.5,
       "radio": "rc2400hp", "compression": {"a": 0.4}}
    ]
  })";
  Scenario sc = parse_scenario(doc, "test");
  REQUIRE(sc.devices.size() == 3);
  CHECK(sc.devices[0].distance == 2.0);
  CHECK(sc.devices[0].b0 == 3.0);
  CHECK(sc.devices[0].l0 == 2e6);
  CHECK(sc.devices[1].d_th == 12.0);
  CHECK(sc.devices[1].priority == 4);
  CHECK(sc.devices[2].radio.p_min == doctest::Approx(0.01122).epsilon(1e-12));
  CHECK(sc.devices[2].compression.a == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(sc.devices[2].compression.b == doctest::Approx(19.9).epsilon(1e-12));
}

TEST_CASE("csv artifacts use the fixed dialect") {
  namespace fs = std::filesystem;
  fs::path dir = fs::path("tmp_unit_csv");
  fs::create_directories(dir);
  std::string path = (dir / "probe.csv").string();
  {
    CsvWriter w(path, {"name", "k", "x"});
    w.cell(std::string("alpha")).cell(7L).cell(0.1);
    w.end_row();
    w.cell(std::string("beta")).cell(-2L).cell(1.0 / 3.0);
    w.end_row();
  }
  std::string raw = slurp(path);
  CHECK(raw.find('\r') == std::string::npos);
  CHECK(raw.back() == '\n');

  auto rows = read_csv(path);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"name", "k", "x"});
  CHECK(rows[1] == std::vector<std::string>{"alpha", "7", "0.1"});
  CHECK(rows[2][2] == "0.333333333333");

  CHECK(csv_format(0.1) == "0.1");
  CHECK(csv_format(2.0) == "2");
  CHECK(csv_format(1.0 / 3.0) == "0.333333333333");
  fs::remove_all(dir);
}

TEST_CASE("an experiment run writes deterministic artifacts") {
  namespace fs = std::filesystem;
  Scenario sc = parse_scenario(kSmallDoc, "test");

  ExperimentOptions opts = options_from(sc);
  CHECK(opts.mode == CsiMode::full_csi);
  CHECK(opts.seed == 42);

  fs::path d1 = fs::path("tmp_unit_exp_a");
  fs::path d2 = fs::path("tmp_unit_exp_b");
  fs::remove_all(d1);
  fs::remove_all(d2);
  opts.out_dir = d1.string();
  ExperimentResult r1 = run_experiment(sc, opts);
  REQUIRE(r1.feasible);
  CHECK(r1.admission.dismissed.empty());
  REQUIRE(!r1.files.empty());
  REQUIRE(!r1.sweep.rows.empty());

  // tradeoff rows land in the artifact with matching values
  auto rows = read_csv((d1 / "tradeoff.csv").string());
  REQUIRE(rows.size() == r1.sweep.rows.size() + 1);
  CHECK(rows[1][0] == "1");

  opts.out_dir = d2.string();
  ExperimentResult r2 = run_experiment(sc, opts);
  REQUIRE(r2.feasible);
  REQUIRE(r2.files.size() == r1.files.size());
  for (std::size_t i = 0; i < r1.files.size(); ++i) {
    std::string base = fs::path(r1.files[i]).filename().string();
    CHECK(slurp(r1.files[i]) == slurp((d2 / base).string()));
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("a frame report applies admission then solves the survivors") {
  Scenario sc = parse_scenario(kSmallDoc, "test");
  std::vector<double> energies{0.05, 0.03, 0.002};
  FrameReport rep = solve_frame_report(sc, energies, CsiMode::full_csi, 42);
  CHECK(rep.admission.dismissed.empty());
  REQUIRE(rep.admitted.size() == 3);
  REQUIRE(rep.solution.feasible);
  CHECK(std::fabs(rep.solution.gamma_star - 0.7511239384705751) <= 2e-6);
}
