#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edt/admission.hpp"
#include "edt/model.hpp"

namespace edt {

// One experiment description: devices, channel, frame timing, and run defaults.
// Loaded from a JSON file with a strict schema (unknown keys are errors); every
// validation failure throws std::domain_error naming the offending key.
struct Scenario {
  int schema_version = 1;
  std::string name;
  std::vector<DeviceParams> devices;
  std::vector<double> batteries;  // aligned with devices, J
  ChannelModel channel;
  double t_frame = 1.0;
  std::vector<double> zeta_pattern;  // per-frame payload multipliers, empty = none
  SolverConfig solver;    // numeric knobs, defaults unless overridden
  PlannerConfig planner;

  // Run defaults, overridable from the command line.
  CsiMode mode = CsiMode::statistical;
  std::vector<double> sigmas{0.5};
  std::uint64_t seed = 42;
  std::vector<double> t_sweep;      // frame lengths for the dismissal sweep, s
  std::vector<double> alpha_sweep;  // processing slopes for the sensitivity sweep

  std::vector<std::string> notices;  // defaulted keys worth telling the user about
};

// Catalog lookups; throw std::domain_error on an unknown name.
RadioParams catalog_radio(const std::string& name);    // rn131c, rc2400hp
DeviceParams catalog_device(const std::string& name);  // g1, g2, g3
std::vector<std::string> catalog_names();

CsiMode mode_from_string(const std::string& s);
std::string to_string(CsiMode mode);

Scenario load_scenario(const std::string& path);
// Same parser over an in-memory document; `origin` names the source in errors.
Scenario parse_scenario(const std::string& text, const std::string& origin);

}  // namespace edt
