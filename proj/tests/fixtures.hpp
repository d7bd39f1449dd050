#pragma once

// Shared builders for the three-class reference network used across the tests:
// two short-range high-rate classes on the high-power radio and one long-range
// low-rate class on the low-power radio, Rayleigh fading, 3.5 path-loss exponent.

#include <cmath>
#include <vector>

#include "edt/model.hpp"
#include "edt/scenario.hpp"

namespace edt::test {

inline ChannelModel reference_channel(double pr_tx) {
  ChannelModel ch;
  ch.w = 5e6;
  ch.n0 = std::pow(10.0, -19.7);
  ch.path_loss_exp = 3.5;
  ch.fading = Fading::rayleigh;
  ch.pr_tx = pr_tx;
  ch.snr_margin = 1.0;
  return ch;
}

// One device per class, ids 0..2, catalog batteries.
inline std::vector<DeviceParams> reference_devices() {
  return {catalog_device("g1"), catalog_device("g2"), catalog_device("g3")};
}

// n copies of each class with fresh ids and a common battery.
inline std::vector<DeviceParams> replicated_devices(int per_class, double b0) {
  std::vector<DeviceParams> out;
  int id = 0;
  for (const char* name : {"g1", "g2", "g3"}) {
    for (int i = 0; i < per_class; ++i) {
      DeviceParams d = catalog_device(name);
      d.id = id++;
      d.b0 = b0;
      out.push_back(d);
    }
  }
  return out;
}

}  // namespace edt::test
