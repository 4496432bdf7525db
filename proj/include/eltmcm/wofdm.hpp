#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "eltmcm/channel.hpp"
#include "eltmcm/filterbank.hpp"

namespace eltmcm {

/// Windowed CP-OFDM with Hermitian-symmetric loading (real baseband output).
/// Symbol period is fft_size + guard; each symbol pulse is extended by
/// rolloff samples and tapered with a raised cosine over its first and last
/// rolloff samples. Active indices must lie in (0, fft_size/2).
struct WofdmConfig {
  int fft_size = 0;
  int guard = 0;
  int rolloff = 0;
  ToneMask active;
  double spacing = 0.0;    // subcarrier spacing, Hz
  int timing_offset = 0;  // receiver window start past the guard interval

  double sample_rate() const noexcept { return fft_size * spacing; }
  int period() const noexcept { return fft_size + guard; }
  int pulse_length() const noexcept { return fft_size + guard + rolloff; }
};

void validate(const WofdmConfig& cfg);

/// Transmit window w[0 .. M+GI+RO).
std::vector<double> wofdm_window(const WofdmConfig& cfg);

struct WofdmSinrProfile {
  std::vector<int> subcarriers;
  std::vector<double> channel_gain;   // |H_k|^2
  std::vector<double> signal_gain;    // |own coefficient|^2 at the aligned symbol
  std::vector<double> noise;          // sigma_n^2(k)
  std::vector<double> interference;   // ISI + ICI power
  std::vector<double> sinr;
  std::vector<bool> unusable;
  double symbol_variance = 1.0;
  /// Received power per sample, as returned by wofdm_received_power.
  double received_power = 0.0;
};

/// Per-subcarrier SINR after one-tap zero forcing, with the interference
/// computed exactly from the transmultiplexer kernels. noise_taps is the
/// noise shaping filter b (noise = b * white).
WofdmSinrProfile wofdm_sinr(const WofdmConfig& cfg, const ChannelRealization& ch, std::span<const double> noise_taps,
                            double symbol_variance = 1.0);
WofdmSinrProfile wofdm_sinr(const WofdmConfig& cfg, const ChannelRealization& ch, const NoiseModel& noise,
                            double symbol_variance = 1.0);

/// Channel frequency response at the active bins, H_k = sum_l a_l e^{-j 2 pi k l / M}.
std::vector<std::complex<double>> wofdm_channel_response(const WofdmConfig& cfg, const ChannelRealization& ch);

/// Received power per sample for circular symbols of variance sigma_x^2.
double wofdm_received_power(const WofdmConfig& cfg, const ChannelRealization& ch, double symbol_variance);
/// Noise power inside the active bins [(k - 1/2) 2 pi/M, (k + 1/2) 2 pi/M].
double wofdm_inband_noise(std::span<const double> noise_taps, const WofdmConfig& cfg);

/// symbols: |K| x S complex. Output length (S-1)(M+GI) + M+GI+RO, real.
std::vector<double> wofdm_modulate(const Eigen::MatrixXcd& symbols, const WofdmConfig& cfg);

/// Strips the guard, takes the unitary DFT and, if `equalizer` is non-empty,
/// divides bin K[i] by equalizer[i]. Returns |K| x (number of full windows).
Eigen::MatrixXcd wofdm_demodulate(std::span<const double> y, const WofdmConfig& cfg,
                                  std::span<const std::complex<double>> equalizer = {});

}  // namespace eltmcm
