#pragma once

#include <stdexcept>
#include <string>

#include "edt/config.hpp"

namespace edt {

// Rate-distortion curve of the source coder: D(eta_p) = [b (eta_p^-a - 1)]^+ for a
// compression ratio eta_p in (0, 1], together with a linear processing-energy model
// E_p(L) = e0_alpha * L + beta_p * L0.
struct CompressionParams {
  double a = 0.35;          // distortion exponent, > 0
  double b = 19.9;          // distortion scale, > 0
  double e0_alpha = 50e-9;  // processing energy slope, J per compressed bit
  double beta_p = 0.0;      // processing energy offset coefficient, J per source bit

  void validate() const;
};

struct RadioParams {
  double p_min = 0.0;        // smallest usable transmit power, W
  double p_max = 0.0;        // largest transmit power, W
  double eta_a = 1.0;        // power amplifier efficiency, (0, 1]
  double e_c_rate = 0.0;     // circuitry power drawn while transmitting, W
  double beta_const = 0.0;   // constant per-frame sensing + wake-up energy, J

  void validate() const;
};

struct DeviceParams {
  int id = 0;
  RadioParams radio;
  CompressionParams compression;
  double l0 = 0.0;      // source payload per frame, bits
  double d_th = 0.0;    // distortion threshold
  int priority = 0;     // admission rank, 0 = highest priority
  double b0 = 0.0;      // battery budget over the lifetime, J
  double distance = 0.0;  // m

  void validate() const;
};

enum class Fading { none, rayleigh };

struct ChannelModel {
  double w = 0.0;            // bandwidth, Hz
  double n0 = 0.0;           // noise power spectral density, W/Hz
  double path_loss_exp = 2.0;
  Fading fading = Fading::rayleigh;
  double pr_tx = 1.0;        // required transmission probability, (0, 1]
  double snr_margin = 1.0;   // scales the SNR; 1 = capacity-achieving modulation

  // Noise-normalized mean channel gain at a given distance: the received SNR at
  // transmit power p is mean_gain(d) * p (times the fading coefficient).
  double mean_gain(double distance) const;
  void validate() const;
};

// D(eta_p); exactly zero at eta_p = 1. Domain eta_p in (0, 1].
double distortion(double eta_p, const CompressionParams& cp);

// Compression ratio reaching distortion d >= 0 with the constraint tight.
double inverse_distortion(double d, const CompressionParams& cp);

// Capacity of the slot in bit/s at normalized gain h and transmit power p.
double shannon_rate(double h, double p, double w);

// Energy spent compressing l_bits out of a source block of l0 bits.
// Domain: 0 <= l_bits <= l0.
double processing_energy(double l_bits, double l0, const CompressionParams& cp);

// Per-frame energy: processing + amplifier draw + constant sensing + circuitry.
double total_energy(double p, double tau, double l_bits, const DeviceParams& dev);

// Fading coefficient below which the node stays silent, chosen so that
// P(theta >= threshold) = pr_tx. Zero when there is no fading.
double fading_threshold(double pr_tx, Fading fading);

namespace detail {
// Linear processing-energy form without the l_bits <= l0 domain check; the fading
// power policy evaluates it at capacity payloads that may exceed the source size.
inline double processing_energy_raw(double l_bits, double l0, const CompressionParams& cp) {
  return cp.e0_alpha * l_bits + cp.beta_p * l0;
}
}  // namespace detail

}  // namespace edt
