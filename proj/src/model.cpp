#include "edt/model.hpp"

#include <cmath>

namespace edt {

namespace {
void require(bool cond, const std::string& msg) {
  if (!cond) throw std::domain_error(msg);
}
}  // namespace

void CompressionParams::validate() const {
  require(a > 0.0, "compression.a must be > 0");
  require(b > 0.0, "compression.b must be > 0");
  require(e0_alpha >= 0.0, "compression.e0_alpha must be >= 0");
  require(beta_p >= 0.0, "compression.beta_p must be >= 0");
}

void RadioParams::validate() const {
  require(p_min > 0.0, "radio.p_min must be > 0");
  require(p_max >= p_min, "radio.p_max must be >= p_min");
  require(eta_a > 0.0 && eta_a <= 1.0, "radio.eta_a must be in (0, 1]");
  require(e_c_rate >= 0.0, "radio.e_c_rate must be >= 0");
  require(beta_const >= 0.0, "radio.beta_const must be >= 0");
}

void DeviceParams::validate() const {
  radio.validate();
  compression.validate();
  require(l0 > 0.0, "device.l0 must be > 0");
  require(d_th > 0.0, "device.d_th must be > 0");
  require(priority >= 0, "device.priority must be >= 0");
  require(b0 > 0.0, "device.b0 must be > 0");
  require(distance > 0.0, "device.distance must be > 0");
}

void ChannelModel::validate() const {
  require(w > 0.0, "channel.w must be > 0");
  require(n0 > 0.0, "channel.n0 must be > 0");
  require(path_loss_exp > 0.0, "channel.path_loss_exp must be > 0");
  require(pr_tx > 0.0 && pr_tx <= 1.0, "channel.pr_tx must be in (0, 1]");
  require(snr_margin > 0.0, "channel.snr_margin must be > 0");
}

double ChannelModel::mean_gain(double distance) const {
  if (distance <= 0.0) throw std::domain_error("distance must be > 0");
  return snr_margin * std::pow(distance, -path_loss_exp) / (n0 * w);
}

double distortion(double eta_p, const CompressionParams& cp) {
  if (!(eta_p > 0.0) || eta_p > 1.0) throw std::domain_error("eta_p must be in (0, 1]");
  double d = cp.b * (std::pow(eta_p, -cp.a) - 1.0);
  return d > 0.0 ? d : 0.0;
}

double inverse_distortion(double d, const CompressionParams& cp) {
  if (d < 0.0) throw std::domain_error("distortion must be >= 0");
  return std::pow(1.0 + d / cp.b, -1.0 / cp.a);
}

double shannon_rate(double h, double p, double w) {
  if (h < 0.0 || p < 0.0 || w <= 0.0) throw std::domain_error("shannon_rate domain");
  return w * std::log2(1.0 + h * p);
}

double processing_energy(double l_bits, double l0, const CompressionParams& cp) {
  if (l_bits < 0.0 || l_bits > l0) throw std::domain_error("l_bits must be in [0, l0]");
  return detail::processing_energy_raw(l_bits, l0, cp);
}

double total_energy(double p, double tau, double l_bits, const DeviceParams& dev) {
  if (p < 0.0 || tau < 0.0) throw std::domain_error("total_energy domain");
  return processing_energy(l_bits, dev.l0, dev.compression) + dev.radio.beta_const +
         (p / dev.radio.eta_a + dev.radio.e_c_rate) * tau;
}

double fading_threshold(double pr_tx, Fading fading) {
  if (!(pr_tx > 0.0) || pr_tx > 1.0) throw std::domain_error("pr_tx must be in (0, 1]");
  if (fading == Fading::none) return 0.0;
  return -std::log(pr_tx);
}

}  // namespace edt
