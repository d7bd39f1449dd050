#include "edt/admission.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace edt {

double min_transmission_time(const DeviceParams& dev, const ChannelModel& ch,
                             CsiMode mode) {
  double factor = 1.0;
  if (mode != CsiMode::full_csi && ch.fading != Fading::none)
    factor = fading_threshold(ch.pr_tx, ch.fading);
  double gain = ch.mean_gain(dev.distance) * factor;
  double l_min = inverse_distortion(dev.d_th, dev.compression) * dev.l0;
  double rate = shannon_rate(gain, dev.radio.p_max, ch.w);
  if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
  return l_min / rate;
}

AdmissionResult dismiss(std::span<const DeviceParams> devices, const ChannelModel& ch,
                        double t_frame, CsiMode mode, Rng& rng,
                        const AdmissionConfig& cfg) {
  std::vector<std::size_t> remaining(devices.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::vector<double> slots(devices.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    slots[i] = min_transmission_time(devices[i], ch, mode);
    sum += slots[i];
  }
  AdmissionResult out;
  while (sum > t_frame && !remaining.empty()) {
    double total_w = 0.0;
    for (std::size_t i : remaining)
      total_w += std::pow(cfg.weight_base, std::min(devices[i].priority, 512));
    double pick = rng.next_double() * total_w;
    std::size_t chosen = remaining.back();
    double acc = 0.0;
    for (std::size_t i : remaining) {
      acc += std::pow(cfg.weight_base, std::min(devices[i].priority, 512));
      if (pick < acc) {
        chosen = i;
        break;
      }
    }
    sum -= slots[chosen];
    out.dismissed.push_back(devices[chosen].id);
    remaining.erase(std::find(remaining.begin(), remaining.end(), chosen));
  }
  for (std::size_t i : remaining) {
    out.admitted.push_back(devices[i].id);
    out.min_slots.push_back(slots[i]);
  }
  out.min_slot_sum = sum;
  return out;
}

}  // namespace edt
