#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <vector>

#include "eltmcm/channel.hpp"
#include "eltmcm/filterbank.hpp"

namespace eltmcm {

/// Receiver timing. The synthesis-channel-analysis cascade is read at lag
/// tau = symbol_delay * M - beta, with 0 <= beta < M. The estimate for
/// transmitted symbol m is produced at output index m + symbol_delay.
struct Alignment {
  int beta = 0;
  int symbol_delay = 0;

  long total_delay(int num_subbands) const noexcept { return static_cast<long>(symbol_delay) * num_subbands - beta; }
};

/// Transmultiplexer kernels over active subcarriers. Entry (i, j) of cos_at(d)
/// is the cosine-branch output of subcarrier K[i] for a unit symbol on K[j]
/// transmitted d symbols later than the one aligned with the output.
struct KernelTable {
  std::vector<int> subcarriers;
  Alignment alignment;
  int min_offset = 0;
  int max_offset = -1;
  std::vector<Eigen::MatrixXd> qc;
  std::vector<Eigen::MatrixXd> qs;

  bool has_offset(int d) const noexcept { return d >= min_offset && d <= max_offset; }
  const Eigen::MatrixXd& cos_at(int d) const;
  const Eigen::MatrixXd& sin_at(int d) const;
  /// Element access returning 0 outside the stored support.
  double cos(std::size_t i, std::size_t j, int d) const;
  double sin(std::size_t i, std::size_t j, int d) const;
};

/// Cascade filters g_k = f_k * a for the active subcarriers (rows).
RowMatrix cascade_filters(const ModulatedBank& bank, const ChannelRealization& ch, const ToneMask& mask);

/// Picks the lag maximizing the summed own-subcarrier cosine plus sine energy; ties go to the smallest beta.
Alignment choose_alignment(const ModulatedBank& bank, const ChannelRealization& ch, const ToneMask& mask);
int choose_beta(const ModulatedBank& bank, const ChannelRealization& ch, const ToneMask& mask);

/// Completes a fixed beta with the symbol delay of largest own-subcarrier energy.
Alignment alignment_for_beta(const ModulatedBank& bank, const ChannelRealization& ch, const ToneMask& mask, int beta);

/// Exact kernels over their full finite support.
KernelTable kernel_q(const ModulatedBank& bank, const ChannelRealization& ch, const Alignment& alignment,
                     const ToneMask& mask);
KernelTable kernel_q(const ModulatedBank& bank, const ChannelRealization& ch, int beta, const ToneMask& mask);

/// Frequency-sampling zero-forcing ASCET design of order L (2L+1 taps per branch).
EqualizerTaps design_ascet(const ModulatedBank& bank, const ChannelRealization& ch, const Alignment& alignment,
                           const ToneMask& mask, int order);
EqualizerTaps design_ascet(const ModulatedBank& bank, const ChannelRealization& ch, const ToneMask& mask, int order);

/// Exact: powers of the equalized output for i.i.d. symbols. AppendixPerTap:
/// each tap's contribution squared separately (coincides with Exact for order 0).
enum class PowerForm { exact, appendix_per_tap };

struct InterferencePowers {
  std::vector<double> signal, isi, ici;
};

/// Signal, ISI and ICI powers in one pass.
InterferencePowers interference_powers(const KernelTable& q, const EqualizerTaps& taps, double symbol_variance,
                                       PowerForm form = PowerForm::exact);

std::vector<double> power_signal(const KernelTable& q, const EqualizerTaps& taps, double symbol_variance,
                                 PowerForm form = PowerForm::exact);
std::vector<double> power_isi(const KernelTable& q, const EqualizerTaps& taps, double symbol_variance,
                              PowerForm form = PowerForm::exact);
std::vector<double> power_ici(const KernelTable& q, const EqualizerTaps& taps, double symbol_variance,
                              PowerForm form = PowerForm::exact);

/// Equalized noise filter of subcarrier K[row]: sum_mu c_mu h[t - (mu+L)M] + s_mu h^s[t - (mu+L)M].
std::vector<double> equalized_noise_filter(const ModulatedBank& bank, const EqualizerTaps& taps, std::size_t row);

/// Noise power at the equalizer output for noise b * w (w white, unit variance).
std::vector<double> power_noise(const ModulatedBank& bank, const EqualizerTaps& taps, std::span<const double> noise_taps);
std::vector<double> power_noise(const ModulatedBank& bank, const EqualizerTaps& taps, const NoiseModel& noise,
                                double sample_rate);

struct SinrProfile {
  std::vector<int> subcarriers;
  std::vector<double> signal, isi, ici, noise, sinr;
  /// Set where both numerator and denominator were zero.
  std::vector<bool> undefined;
  double symbol_variance = 1.0;
  int beta = 0;
  int order = 0;
};

/// Elementwise P_signal / (P_isi + P_ici + P_noise). Zero denominator gives
/// +infinity, or 0 flagged undefined when the numerator is zero too.
SinrProfile sinr(std::span<const double> signal, std::span<const double> isi, std::span<const double> ici,
                 std::span<const double> noise);

/// Received power per sample: (sigma_x^2 / M) * sum_k ||a * f_k||^2.
double elt_received_power(const ModulatedBank& bank, const ChannelRealization& ch, const ToneMask& mask,
                          double symbol_variance);
/// Noise power inside the active subbands [k pi/M, (k+1) pi/M].
double elt_inband_noise(std::span<const double> noise_taps, const ToneMask& mask, int num_subbands);

void write_kernel_csv(std::ostream& os, const KernelTable& q);
void write_sinr_csv(std::ostream& os, const SinrProfile& p);
/// Tap file: "k,mu,c,s" rows.
void write_taps_csv(std::ostream& os, const EqualizerTaps& taps);
EqualizerTaps read_taps_csv(std::istream& is);

}  // namespace eltmcm
