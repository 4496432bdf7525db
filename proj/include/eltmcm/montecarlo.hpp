#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eltmcm/sinr.hpp"
#include "eltmcm/wofdm.hpp"

namespace eltmcm {

/// Time-domain simulation settings for the brute-force power estimates.
struct MonteCarloOptions {
  std::size_t num_symbols = 100000;        // estimates per quantity and subcarrier
  std::size_t num_noise_symbols = 1000000;  // noise-only output symbols
  std::uint64_t seed = 1;
};

/// Per-subcarrier powers measured from the simulated signal path.
struct MonteCarloPowers {
  std::vector<int> subcarriers;
  std::vector<double> signal, isi, ici, noise;
  /// Measured gain of the equalized output to its own aligned symbol.
  std::vector<double> own_gain;
  /// SINR from the error vector of a fully loaded noisy frame.
  std::vector<double> sinr;
};

/// Unit-variance 4-PAM symbols.
Eigen::MatrixXd random_pam(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, std::uint64_t index);

/// Kernels measured by transmitting a single unit symbol per subcarrier and
/// reading the demodulator outputs; same layout as kernel_q.
KernelTable measure_kernel(const ModulatedBank& bank, const ChannelRealization& ch, const Alignment& alignment,
                           const ToneMask& mask);

/// ELT-MCM simulation: isolated symbols for the signal power, single-subcarrier
/// frames for ISI, frames with the subcarrier silent for ICI, a noise-only
/// stream for the noise power and a loaded noisy frame for the SINR.
MonteCarloPowers simulate_elt_powers(const ModulatedBank& bank, const ChannelRealization& ch,
                                     const Alignment& alignment, const ToneMask& mask, const EqualizerTaps& taps,
                                     std::span<const double> noise_taps, const MonteCarloOptions& options);

/// Windowed-OFDM simulation of the interference power after the receiver DFT
/// (noise-free, QPSK symbols on every active subcarrier).
std::vector<double> simulate_wofdm_interference(const WofdmConfig& cfg, const ChannelRealization& ch,
                                                const MonteCarloOptions& options);

}  // namespace eltmcm
