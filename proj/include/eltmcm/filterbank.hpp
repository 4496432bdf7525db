#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "eltmcm/prototype.hpp"

namespace eltmcm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Set of active subcarriers, strictly increasing, all below num_subbands.
struct ToneMask {
  std::vector<int> active;

  static ToneMask all(int num_subbands);
  /// Validates ordering and range; throws ParameterError("mask", ...) otherwise.
  static ToneMask from_indices(std::vector<int> indices, int num_subbands);

  std::size_t size() const noexcept { return active.size(); }
  bool empty() const noexcept { return active.empty(); }
};

/// Real PAM amplitudes indexed [subcarrier][symbol] over all M subcarriers.
struct SymbolFrame {
  Eigen::MatrixXd symbols;
  double symbol_variance = 1.0;
};

/// Cosine-modulated synthesis bank and its cosine/sine analysis banks.
/// Row k of each matrix holds the filter for subcarrier k over samples 0..N.
struct ModulatedBank {
  PrototypeFilter prototype;
  RowMatrix synth;
  RowMatrix analysis_cos;
  RowMatrix analysis_sin;
  std::vector<double> phases;

  int num_subbands() const noexcept { return prototype.num_subbands; }
  int overlap() const noexcept { return prototype.overlap; }
  int order() const noexcept { return prototype.order(); }
  int filter_length() const noexcept { return static_cast<int>(prototype.length()); }
};

/// Builds the banks. phases defaults to theta_k = 0; entries must be 0 or pi.
ModulatedBank build_bank(const PrototypeFilter& prototype, std::vector<double> phases = {});

/// x[n] = sum_k sum_m x_{k,m} f_k[n - mM]. Output length (S-1)M + 2*kappa*M.
std::vector<double> modulate(const SymbolFrame& frame, const ModulatedBank& bank, const ToneMask& mask);
/// Same, with symbols given only for the active subcarriers (|K| x S).
std::vector<double> modulate_active(const Eigen::MatrixXd& symbols, const ModulatedBank& bank, const ToneMask& mask);

/// Analysis outputs for the active subcarriers. Column j holds symbol index first_symbol + j.
struct Demodulated {
  std::vector<int> subcarriers;
  Eigen::MatrixXd cos;
  Eigen::MatrixXd sin;
  int first_symbol = 0;
};

/// y^c_{i,n} = sum_t h_i[t] y[nM - beta - t]. Outputs needing samples outside
/// the stream are dropped. Throws DimensionError if no output symbol exists.
Demodulated demodulate(std::span<const double> y, const ModulatedBank& bank, int beta, const ToneMask& mask);

/// Per-subcarrier ASCET taps; column mu + order holds tap mu in [-order, order].
struct EqualizerTaps {
  int order = 0;
  std::vector<int> subcarriers;
  Eigen::MatrixXd c;
  Eigen::MatrixXd s;
  /// Set where the channel response had to be clamped during design.
  std::vector<bool> clamped;

  double c_at(std::size_t row, int mu) const { return c(static_cast<Eigen::Index>(row), mu + order); }
  double s_at(std::size_t row, int mu) const { return s(static_cast<Eigen::Index>(row), mu + order); }
};

/// c = 1 at mu = 0, everything else zero.
EqualizerTaps identity_taps(const ToneMask& mask, int order);

/// Restricts equalizer taps to the given rows.
EqualizerTaps select_rows(const EqualizerTaps& taps, std::span<const std::size_t> rows);

/// Equalized estimates; column j holds symbol index first_symbol + j.
struct Equalized {
  std::vector<int> subcarriers;
  Eigen::MatrixXd symbols;
  int first_symbol = 0;
};

/// xhat_{k,m0} = sum_mu y^c_{k,m0-mu} c_{k,mu} + y^s_{k,m0-mu} s_{k,mu}.
/// Estimates without full context are omitted; DimensionError if none remain.
Equalized apply_ascet(const Demodulated& y, const EqualizerTaps& taps);

}  // namespace eltmcm
