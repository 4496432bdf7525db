#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eltmcm/channel.hpp"
#include "eltmcm/filterbank.hpp"
#include "eltmcm/wofdm.hpp"

namespace eltmcm {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Phy { elt_mcm, wofdm, both };

/// Frequency band [lo, hi] in Hz.
using Band = std::pair<double, double>;

/// Amateur radio bands notched by default.
std::vector<Band> default_notches();

/// Active bins fully inside [lo, hi] and clear of every notch, trimmed from the
/// top to `count` entries (count 0 keeps all). Bin k covers [k, k+1] * width
/// when `centred` is false and [k - 1/2, k + 1/2] * width otherwise.
/// Throws ParameterError("num_active", ...) if fewer than `count` bins qualify.
ToneMask build_tone_mask(int num_bins, double bin_width, bool centred, Band band, const std::vector<Band>& notches,
                         int count, int first_allowed = 0, int last_allowed = -1);

struct EltSystem {
  int num_subbands = 512;
  int overlap = 2;
  double sample_rate = 62.5e6;
  Band band{1.8e6, 28e6};
  int num_active = 360;
  std::vector<int> mask;  // explicit mask; overrides band/notches when non-empty

  double spacing() const noexcept { return sample_rate / (2.0 * num_subbands); }
  ToneMask tone_mask(const std::vector<Band>& notches) const;
};

struct WofdmSystem {
  int fft_size = 4096;
  int guard = 756;
  int rolloff = 0;
  double sample_rate = 100e6;
  Band band{1.8e6, 30e6};
  int num_active = 917;
  std::vector<int> mask;

  double spacing() const noexcept { return sample_rate / fft_size; }
  WofdmConfig config(const std::vector<Band>& notches) const;
};

struct ExperimentSpec {
  Phy phy = Phy::both;
  std::vector<int> orders{0, 1, 2};
  int channel_class = 5;  // 0 selects the ideal channel
  int realizations = 100;
  std::vector<double> snr_db{0, 5, 10, 15, 20, 25, 30, 35, 40};
  NoiseKind noise = NoiseKind::awgn;
  std::vector<PsdPoint> psd;  // empty selects default_bgn_psd()
  int shaping_len = 1025;
  EltSystem elt;
  WofdmSystem wofdm;
  std::vector<Band> notches = default_notches();
  std::uint64_t seed = 1;
  double ser = 1e-3;
  double symbol_variance = 1.0;
  int threads = 1;

  void validate() const;
};

/// Canonical key=value rendering; equal specs give identical text.
std::string canonical_text(const ExperimentSpec& spec);
/// 64-bit FNV-1a hash of the canonical text, as 16 hex digits.
std::string spec_hash(const ExperimentSpec& spec);

struct SweepCell {
  std::string system;  // "elt_mcm" or "wofdm"
  int equalizer_order = 0;
  double snr_db = 0.0;
  int realization = 0;
  double throughput_bps = 0.0;
  bool ok = true;
  std::string error;
};

struct SweepSummary {
  std::string system;
  int equalizer_order = 0;
  double snr_db = 0.0;
  double mean_bps = 0.0;
  double std_bps = 0.0;
  int n = 0;
  int failed = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<SweepSummary> summary;
  std::string spec_hash;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> realization_seeds;
  std::string version = kToolVersion;
};

/// Realization r uses channel seed spec.seed + r at both sample rates.
SweepResult run_sweep(const ExperimentSpec& spec);
/// Rebuilds the summary rows from the cells (failed cells excluded and counted).
std::vector<SweepSummary> summarize(const std::vector<SweepCell>& cells);

void write_sweep_csv(std::ostream& os, const SweepResult& r);
void write_summary_csv(std::ostream& os, const SweepResult& r);
void write_sweep_metadata(std::ostream& os, const SweepResult& r, const ExperimentSpec& spec);
/// Parses the per-realization CSV; failed cells are stored as "nan".
std::vector<SweepCell> read_sweep_csv(std::istream& is);

struct ValidationOptions {
  int num_subbands = 16;
  int overlap = 2;
  int channel_length = 6;
  std::vector<int> orders{0, 1, 2};
  double noise_variance = 1e-2;
  bool ideal_channel = false;
  std::size_t num_symbols = 100000;
  std::size_t num_noise_symbols = 1000000;
  std::uint64_t seed = 7;
  /// Fault injection: perturb the equalizer taps used for the analytical noise power.
  bool corrupt_noise_taps = false;
  bool include_wofdm = true;
};

struct ValidationEntry {
  std::string quantity;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  bool passed() const;
};

/// Toy-size analytical versus time-domain comparison.
/// kernel: max |Q - Q_measured| / max |Q| (tolerance 1e-12);
/// powers: max relative deviation (tolerance 2%, or 1e-10 on the ideal channel);
/// sinr_db: max absolute dB deviation (tolerance 0.1 dB, or 1e-10 on the ideal channel).
ValidationReport run_validation(const ValidationOptions& options);
void write_validation_report(std::ostream& os, const ValidationReport& report);

/// Random toy channel with exponentially decaying Gaussian taps, a_0 = 1.
ChannelRealization toy_channel(int length, std::uint64_t seed, double sample_rate = 1.0);

}  // namespace eltmcm
