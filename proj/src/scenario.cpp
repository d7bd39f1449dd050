#include "edt/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace edt {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::domain_error(msg); }

// Every object is checked against its full key list so a typo fails loudly
// instead of silently falling back to a default.
void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(where + ": unknown key \"" + it.key() + "\"");
  }
}

double get_number(const json& j, const std::string& key) {
  if (!j.at(key).is_number()) fail(key + " must be a number");
  return j.at(key).get<double>();
}

double get_number_or(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  return get_number(j, key);
}

std::vector<double> get_number_list(const json& j, const std::string& key) {
  const json& a = j.at(key);
  if (!a.is_array() || a.empty()) fail(key + " must be a non-empty array of numbers");
  std::vector<double> out;
  for (const auto& v : a) {
    if (!v.is_number()) fail(key + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

RadioParams catalog_radio(const std::string& name) {
  RadioParams r;
  r.beta_const = 1e-3;
  if (name == "rn131c") {
    r.p_min = 0.100;
    r.p_max = 0.2377;
    r.eta_a = 0.58;
    r.e_c_rate = 0.16775;
    return r;
  }
  if (name == "rc2400hp") {
    r.p_min = 0.01122;
    r.p_max = 0.10715;
    r.eta_a = 0.23;
    r.e_c_rate = 0.06015;
    return r;
  }
  fail("unknown catalog radio \"" + name + "\"");
}

DeviceParams catalog_device(const std::string& name) {
  DeviceParams d;  // compression defaults already match the reference coder
  d.b0 = 240.0;
  if (name == "g1") {
    d.radio = catalog_radio("rn131c");
    d.distance = 4.0;
    d.l0 = 2e6;
    d.d_th = 8.0;
    d.priority = 0;
    return d;
  }
  if (name == "g2") {
    d.radio = catalog_radio("rn131c");
    d.distance = 20.0;
    d.l0 = 1e6;
    d.d_th = 15.0;
    d.priority = 1;
    return d;
  }
  if (name == "g3") {
    d.radio = catalog_radio("rc2400hp");
    d.distance = 100.0;
    d.l0 = 1e4;
    d.d_th = 4.0;
    d.priority = 2;
    return d;
  }
  fail("unknown catalog device \"" + name + "\"");
}

std::vector<std::string> catalog_names() {
  return {"g1", "g2", "g3", "rn131c", "rc2400hp"};
}

CsiMode mode_from_string(const std::string& s) {
  if (s == "full_csi") return CsiMode::full_csi;
  if (s == "statistical") return CsiMode::statistical;
  if (s == "suboptimal") return CsiMode::suboptimal;
  fail("mode must be full_csi, statistical or suboptimal, got \"" + s + "\"");
}

std::string to_string(CsiMode mode) {
  switch (mode) {
    case CsiMode::full_csi: return "full_csi";
    case CsiMode::statistical: return "statistical";
    case CsiMode::suboptimal: return "suboptimal";
  }
  return "?";
}

namespace {

ChannelModel parse_channel(const json& j) {
  check_keys(j, "channel",
             {"bandwidth_hz", "noise_density", "noise_density_dbm_hz",
              "path_loss_exp", "fading", "pr_tx", "snr_margin"});
  ChannelModel ch;
  ch.w = get_number(j, "bandwidth_hz");
  bool lin = j.contains("noise_density");
  bool dbm = j.contains("noise_density_dbm_hz");
  if (lin == dbm)
    fail("channel needs exactly one of noise_density, noise_density_dbm_hz");
  ch.n0 = lin ? get_number(j, "noise_density")
              : 1e-3 * std::pow(10.0, get_number(j, "noise_density_dbm_hz") / 10.0);
  ch.path_loss_exp = get_number(j, "path_loss_exp");
  std::string fading = j.contains("fading") ? j.at("fading").get<std::string>()
                                            : std::string("rayleigh");
  if (fading == "rayleigh")
    ch.fading = Fading::rayleigh;
  else if (fading == "none")
    ch.fading = Fading::none;
  else
    fail("channel.fading must be rayleigh or none, got \"" + fading + "\"");
  ch.pr_tx = get_number_or(j, "pr_tx", 1.0);
  ch.snr_margin = get_number_or(j, "snr_margin", 1.0);
  ch.validate();
  return ch;
}

CompressionParams parse_compression(const json& j, const CompressionParams& base) {
  check_keys(j, "compression", {"a", "b", "e0_alpha", "beta_p"});
  CompressionParams cp = base;
  cp.a = get_number_or(j, "a", cp.a);
  cp.b = get_number_or(j, "b", cp.b);
  cp.e0_alpha = get_number_or(j, "e0_alpha", cp.e0_alpha);
  cp.beta_p = get_number_or(j, "beta_p", cp.beta_p);
  return cp;
}

RadioParams parse_radio(const json& j, const RadioParams& base) {
  if (j.is_string()) return catalog_radio(j.get<std::string>());
  check_keys(j, "radio", {"p_min", "p_max", "eta_a", "e_c_rate", "beta_const"});
  RadioParams r = base;
  r.p_min = get_number_or(j, "p_min", r.p_min);
  r.p_max = get_number_or(j, "p_max", r.p_max);
  r.eta_a = get_number_or(j, "eta_a", r.eta_a);
  r.e_c_rate = get_number_or(j, "e_c_rate", r.e_c_rate);
  r.beta_const = get_number_or(j, "beta_const", r.beta_const);
  return r;
}

// A device entry either instantiates a template ("group": catalog name or a name
// from the scenario's groups section) with optional overrides, or is spelled out
// in full. The battery must come from somewhere explicit: the template or the
// entry itself.
DeviceParams parse_device(const json& j, const std::string& where,
                          const std::map<std::string, DeviceParams>& groups) {
  check_keys(j, where,
             {"group", "distance", "l0", "d_th", "priority", "battery", "radio",
              "compression"});
  DeviceParams d;
  bool templated = j.contains("group");
  if (templated) {
    std::string g = j.at("group").get<std::string>();
    auto it = groups.find(g);
    d = it != groups.end() ? it->second : catalog_device(g);
  }
  if (j.contains("radio")) d.radio = parse_radio(j.at("radio"), d.radio);
  if (j.contains("compression"))
    d.compression = parse_compression(j.at("compression"), d.compression);
  if (!templated || j.contains("distance")) d.distance = get_number(j, "distance");
  if (!templated || j.contains("l0")) d.l0 = get_number(j, "l0");
  if (!templated || j.contains("d_th")) d.d_th = get_number(j, "d_th");
  if (j.contains("priority")) d.priority = static_cast<int>(get_number(j, "priority"));
  if (!templated && !j.contains("battery"))
    fail(where + ": battery is required for a device without a group template");
  if (j.contains("battery")) d.b0 = get_number(j, "battery");
  return d;
}

SolverConfig parse_solver(const json& j) {
  check_keys(j, "solver",
             {"tol_gamma", "golden_rel_tol", "power_tol", "quad_rel_tol",
              "quad_abs_tol", "tail_survival", "tau_grid_points"});
  SolverConfig s;
  s.tol_gamma = get_number_or(j, "tol_gamma", s.tol_gamma);
  s.golden_rel_tol = get_number_or(j, "golden_rel_tol", s.golden_rel_tol);
  s.power_tol = get_number_or(j, "power_tol", s.power_tol);
  s.quad_rel_tol = get_number_or(j, "quad_rel_tol", s.quad_rel_tol);
  s.quad_abs_tol = get_number_or(j, "quad_abs_tol", s.quad_abs_tol);
  s.tail_survival = get_number_or(j, "tail_survival", s.tail_survival);
  s.tau_grid_points =
      static_cast<int>(get_number_or(j, "tau_grid_points", s.tau_grid_points));
  for (double v : {s.tol_gamma, s.golden_rel_tol, s.power_tol, s.quad_rel_tol,
                   s.quad_abs_tol, s.tail_survival})
    if (!(v > 0.0)) fail("solver tolerances must be > 0");
  if (s.tau_grid_points < 16) fail("solver.tau_grid_points must be >= 16");
  return s;
}

PlannerConfig parse_planner(const json& j) {
  check_keys(j, "planner",
             {"envelope_samples", "conv_tol", "max_sweeps", "flat_tol",
              "saturation_frac", "n_cap", "slice_e_tol", "redistribution_retries"});
  PlannerConfig p;
  p.envelope_samples =
      static_cast<int>(get_number_or(j, "envelope_samples", p.envelope_samples));
  p.conv_tol = get_number_or(j, "conv_tol", p.conv_tol);
  p.max_sweeps = static_cast<int>(get_number_or(j, "max_sweeps", p.max_sweeps));
  p.flat_tol = get_number_or(j, "flat_tol", p.flat_tol);
  p.saturation_frac = get_number_or(j, "saturation_frac", p.saturation_frac);
  p.n_cap = static_cast<long>(get_number_or(j, "n_cap", static_cast<double>(p.n_cap)));
  p.slice_e_tol = get_number_or(j, "slice_e_tol", p.slice_e_tol);
  p.redistribution_retries = static_cast<int>(
      get_number_or(j, "redistribution_retries", p.redistribution_retries));
  if (p.envelope_samples < 4) fail("planner.envelope_samples must be >= 4");
  if (!(p.conv_tol > 0.0) || !(p.flat_tol > 0.0) || !(p.slice_e_tol > 0.0))
    fail("planner tolerances must be > 0");
  if (p.max_sweeps < 1 || p.n_cap < 1 || p.redistribution_retries < 0)
    fail("planner counts must be positive");
  if (!(p.saturation_frac > 0.0) || p.saturation_frac > 1.0)
    fail("planner.saturation_frac must be in (0, 1]");
  return p;
}

Scenario parse_document(const json& doc, const std::string& origin) {
  if (!doc.is_object()) fail(origin + ": scenario root must be an object");
  check_keys(doc, origin,
             {"schema_version", "name", "channel", "groups", "devices", "t_frame",
              "zeta_pattern", "run", "solver", "planner"});
  Scenario sc;
  if (!doc.contains("schema_version")) fail(origin + ": schema_version is required");
  sc.schema_version = doc.at("schema_version").get<int>();
  if (sc.schema_version != 1)
    fail(origin + ": unsupported schema_version " + std::to_string(sc.schema_version));
  sc.name = doc.contains("name") ? doc.at("name").get<std::string>() : origin;

  if (!doc.contains("channel")) fail(origin + ": channel is required");
  sc.channel = parse_channel(doc.at("channel"));

  std::map<std::string, DeviceParams> groups;
  if (doc.contains("groups")) {
    const json& g = doc.at("groups");
    if (!g.is_object()) fail("groups must be an object");
    for (auto it = g.begin(); it != g.end(); ++it) {
      DeviceParams base = parse_device(it.value(), "groups." + it.key(), groups);
      groups.emplace(it.key(), base);
    }
  }

  if (!doc.contains("devices")) fail(origin + ": devices is required");
  const json& devs = doc.at("devices");
  if (!devs.is_array() || devs.empty()) fail("devices must be a non-empty array");
  int id = 0;
  for (const auto& dj : devs) {
    DeviceParams d =
        parse_device(dj, "devices[" + std::to_string(id) + "]", groups);
    d.id = id++;
    d.validate();
    sc.devices.push_back(d);
    sc.batteries.push_back(d.b0);
  }

  if (doc.contains("t_frame")) {
    sc.t_frame = get_number(doc, "t_frame");
    if (!(sc.t_frame > 0.0)) fail("t_frame must be > 0");
  } else {
    sc.t_frame = 1.0;
    sc.notices.push_back("t_frame not given, defaulting to 1 s");
  }

  if (doc.contains("zeta_pattern")) {
    sc.zeta_pattern = get_number_list(doc, "zeta_pattern");
    for (double z : sc.zeta_pattern)
      if (!(z > 0.0)) fail("zeta_pattern values must be > 0");
  }

  if (doc.contains("solver")) sc.solver = parse_solver(doc.at("solver"));
  if (doc.contains("planner")) sc.planner = parse_planner(doc.at("planner"));

  if (doc.contains("run")) {
    const json& r = doc.at("run");
    check_keys(r, "run", {"mode", "sigma", "seed", "t_sweep", "alpha_sweep"});
    if (r.contains("mode")) sc.mode = mode_from_string(r.at("mode").get<std::string>());
    if (r.contains("sigma")) {
      sc.sigmas = get_number_list(r, "sigma");
      for (double s : sc.sigmas)
        if (s < 0.0 || s > 1.0) fail("run.sigma values must be in [0, 1]");
    }
    if (r.contains("seed")) sc.seed = r.at("seed").get<std::uint64_t>();
    if (r.contains("t_sweep")) {
      sc.t_sweep = get_number_list(r, "t_sweep");
      for (double t : sc.t_sweep)
        if (!(t > 0.0)) fail("run.t_sweep values must be > 0");
    }
    if (r.contains("alpha_sweep")) {
      sc.alpha_sweep = get_number_list(r, "alpha_sweep");
      for (double a : sc.alpha_sweep)
        if (a < 0.0) fail("run.alpha_sweep values must be >= 0");
    }
  }
  return sc;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(origin + ": " + e.what());
  }
  return parse_document(doc, origin);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

}  // namespace edt
