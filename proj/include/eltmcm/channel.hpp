#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace eltmcm {

/// Real FIR channel a_0..a_{L-1} at a given sample rate.
struct ChannelRealization {
  std::vector<double> taps;
  double sample_rate = 0.0;
  std::optional<int> class_label;
  std::uint64_t seed = 0;
};

/// Parameters of the multipath generator. Path lengths are uniform on
/// [0, max_length_m] with Poisson count (path_density * max_length_m); each
/// path has a uniform gain in [-1, 1] and attenuation exp(-(a0 + a1 f^exponent) d).
struct ChannelPreset {
  double path_density = 0.2;  // paths per metre
  double max_length_m = 1000.0;
  double a0 = 1e-3;
  double a1 = 2.5e-10;
  double exponent = 1.0;
  double gain_db = 0.0;
  double velocity = 2e8;    // propagation speed, m/s
  double prefix_s = 0.5e-6;  // leading margin before the first path
  double postfix_s = 1.5e-6;  // trailing margin after the last possible path
};

/// Presets for the strong (1), medium (5) and little (9) attenuation classes.
ChannelPreset class_preset(int cls);

/// Unit impulse channel.
ChannelRealization ideal_channel(double sample_rate);

/// Draws a realization; the same (class, seed) gives the same path set at any sample rate.
ChannelRealization gen_channel(int cls, double sample_rate, std::uint64_t seed);
ChannelRealization gen_channel(const ChannelPreset& preset, double sample_rate, std::uint64_t seed,
                               std::optional<int> class_label = std::nullopt);

/// Mean of |H(f)|^2 over [f_lo, f_hi], evaluated on a dense grid.
double mean_band_gain(const ChannelRealization& ch, double f_lo, double f_hi);

struct PsdPoint {
  double freq_hz = 0.0;
  double dbm_per_hz = 0.0;
};

enum class NoiseKind { awgn, psd };

/// White noise of a given per-sample variance, or colored noise following a PSD
/// table (dBm/Hz, one-sided) scaled by `scale`. Colored samples are in sqrt(mW).
struct NoiseModel {
  NoiseKind kind = NoiseKind::awgn;
  double variance = 0.0;
  std::vector<PsdPoint> psd;
  int shaping_len = 1025;
  double scale = 1.0;

  static NoiseModel awgn(double variance);
  static NoiseModel from_psd(std::vector<PsdPoint> table, int shaping_len = 1025);
};

/// Illustrative heavily-disturbed in-home background noise:
/// S(f) = -145 + 50 exp(-f / 6 MHz) dBm/Hz, tabulated on 0..50 MHz.
std::vector<PsdPoint> default_bgn_psd();

struct ShapingFilter {
  std::vector<double> taps;
  double max_deviation_db = 0.0;
};

/// Linear-phase frequency-sampling FIR whose |B|^2 matches the PSD (as per-sample
/// power density) over [0, fs/2]. Throws ParameterError("num_taps", ...) when
/// the in-band deviation exceeds 1 dB, reporting the achieved value.
ShapingFilter psd_to_shaping(std::span<const PsdPoint> table, double sample_rate, int num_taps);

/// Filter b such that noise = b * w with w white unit-variance Gaussian.
std::vector<double> noise_filter(const NoiseModel& model, double sample_rate);

/// (1/pi) * integral over [w1, w2] of |B(w)|^2, computed exactly from the autocorrelation of b.
double band_noise_power(std::span<const double> b, double w1, double w2);
/// Same integral from a precomputed one-sided autocorrelation R[0..].
double band_power_from_autocorrelation(std::span<const double> R, double w1, double w2);

/// Autocorrelation R[l] = sum_n b[n] b[n+l] for l = 0..len-1.
std::vector<double> autocorrelation(std::span<const double> b);

std::vector<double> gen_noise(const NoiseModel& model, std::size_t length, double sample_rate, std::uint64_t seed);

/// y[n] = sum_l a_l x[n - l - beta] + r[n - beta], output length beta + |x| + L - 1.
std::vector<double> apply_channel(std::span<const double> x, double x_rate, const ChannelRealization& ch,
                                  const NoiseModel& noise, int beta, std::uint64_t seed);

/// Channel file: "sample_rate_hz L" then L taps.
void write_channel(std::ostream& os, const ChannelRealization& ch);
ChannelRealization read_channel(std::istream& is);
/// PSD file: "freq_hz value_dbm_per_hz" lines; '#' starts a comment.
void write_psd(std::ostream& os, std::span<const PsdPoint> table);
std::vector<PsdPoint> read_psd(std::istream& is);

}  // namespace eltmcm
