#pragma once

#include <span>
#include <vector>

#include "edt/model.hpp"
#include "edt/rng.hpp"

namespace edt {

enum class CsiMode { full_csi, statistical, suboptimal };

// Shortest slot that can carry the payload meeting d_th exactly, at p_max, over the
// gain the mode plans against (mean gain for full CSI, worst admissible gain under
// fading). +inf when that gain is zero.
double min_transmission_time(const DeviceParams& dev, const ChannelModel& ch,
                             CsiMode mode);

struct AdmissionResult {
  std::vector<int> admitted;    // ids, input order
  std::vector<int> dismissed;   // ids, removal order
  std::vector<double> min_slots;  // per admitted node, aligned with `admitted`
  double min_slot_sum = 0.0;
};

// Remove nodes one at a time, drawn with probability proportional to
// weight_base^rank (rank 0 = highest priority), until the remaining minimum slots
// fit the frame. Energy plays no role here. Deterministic for a fixed rng state;
// for a fixed seed the removal sequence is a fixed prefix, so the dismissal count
// is non-increasing in t_frame.
AdmissionResult dismiss(std::span<const DeviceParams> devices, const ChannelModel& ch,
                        double t_frame, CsiMode mode, Rng& rng,
                        const AdmissionConfig& cfg = {});

}  // namespace edt
