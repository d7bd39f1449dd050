#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edt/model.hpp"

namespace edt {

enum class PolicyRegime { capped, normal, underuse };

// One evaluation of the fading power policy.
struct PolicyPoint {
  double power = 0.0;   // W
  double l_bits = 0.0;  // transmitted payload at this fading state
  PolicyRegime regime = PolicyRegime::normal;
};

// Transmit policy of one node over the fading states of a frame: below theta_tx the
// node is silent, above it the power is the largest value the energy budget allows,
// clamped into [p_min, p_max]. Value type; evaluation lives in the fading solver.
struct PowerPolicy {
  double theta_tx = 0.0;
  double tau = 0.0;       // slot length the policy was solved for, s
  double e_budget = 0.0;  // per-frame energy the policy satisfies, J
  double h0 = 0.0;        // mean channel gain of the node
  double w = 0.0;         // bandwidth, Hz
  double theta_a = 0.0;   // policy leaves the p_max cap above this state
  double theta_b = 0.0;   // policy hits p_min above this state
  double theta_cap = 0.0; // truncation point of the fading integral
  DeviceParams dev;

  std::optional<PolicyPoint> at(double theta, const SolverConfig& cfg = {}) const;
};

struct NodeAllocation {
  int id = 0;
  double tau = 0.0;        // slot length, s
  double power = 0.0;      // transmit power (at theta_tx in the fading case), W
  double l_bits = 0.0;     // payload (at theta_tx in the fading case), bits
  double distortion = 0.0; // realized (full CSI) or expected (fading) distortion
  double e_used = 0.0;     // energy consumed by the frame, J
  std::optional<PowerPolicy> policy;  // present in statistical mode
};

struct FrameSolution {
  bool feasible = false;
  double gamma_star = 1.0;           // smallest feasible worst-case distortion fraction
  std::vector<NodeAllocation> nodes; // admitted nodes, input order
  std::vector<int> dismissed;        // ids removed by admission (filled by the harness)
  double tau_total = 0.0;            // sum of slot lengths
  std::string binding;               // which constraint broke feasibility
};

}  // namespace edt
