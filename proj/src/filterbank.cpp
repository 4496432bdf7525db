#include "eltmcm/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "eltmcm/error.hpp"

namespace eltmcm {

ToneMask ToneMask::all(int num_subbands) {
  ToneMask m;
  m.active.resize(static_cast<std::size_t>(std::max(num_subbands, 0)));
  for (int k = 0; k < num_subbands; ++k) m.active[k] = k;
  return m;
}

ToneMask ToneMask::from_indices(std::vector<int> indices, int num_subbands) {
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= num_subbands)
      throw ParameterError("mask", "index " + std::to_string(indices[i]) + " outside [0, " +
                                       std::to_string(num_subbands) + ")");
    if (i > 0 && indices[i] <= indices[i - 1])
      throw ParameterError("mask", "indices must be strictly increasing");
  }
  return ToneMask{std::move(indices)};
}

ModulatedBank build_bank(const PrototypeFilter& prototype, std::vector<double> phases) {
  const int M = prototype.num_subbands;
  const int len = static_cast<int>(prototype.length());
  if (M <= 0 || len != 2 * prototype.overlap * M)
    throw DimensionError("prototype length must equal 2*overlap*num_subbands");
  if (phases.empty()) phases.assign(static_cast<std::size_t>(M), 0.0);
  if (phases.size() != static_cast<std::size_t>(M))
    throw DimensionError("expected one phase per subcarrier");
  for (double th : phases)
    if (std::abs(th) > 1e-12 && std::abs(th - std::numbers::pi) > 1e-12)
      throw ParameterError("phases", "each phase must be 0 or pi");

  const int N = len - 1;
  const double scale = std::sqrt(2.0 / M);
  const double centre = (M + 1) / 2.0;
  ModulatedBank bank;
  bank.prototype = prototype;
  bank.phases = std::move(phases);
  bank.synth.resize(M, len);
  bank.analysis_cos.resize(M, len);
  bank.analysis_sin.resize(M, len);
  for (int k = 0; k < M; ++k) {
    const double w = (k + 0.5) * std::numbers::pi / M;
    const double sign = std::cos(bank.phases[k]) > 0 ? 1.0 : -1.0;
    for (int n = 0; n < len; ++n) {
      const double pn = prototype.coeffs[n];
      bank.synth(k, n) = scale * pn * std::cos(w * (n + centre)) * sign;
      bank.analysis_sin(k, n) = scale * pn * std::sin(w * (N - n + centre)) * sign;
    }
    for (int n = 0; n < len; ++n) bank.analysis_cos(k, n) = bank.synth(k, N - n);
  }
  return bank;
}

std::vector<double> modulate(const SymbolFrame& frame, const ModulatedBank& bank, const ToneMask& mask) {
  const int M = bank.num_subbands();
  if (frame.symbols.rows() != M)
    throw DimensionError("frame has " + std::to_string(frame.symbols.rows()) + " subcarrier rows, expected " +
                         std::to_string(M));
  std::vector<char> on(static_cast<std::size_t>(M), 0);
  for (int k : mask.active) {
    if (k < 0 || k >= M) throw DimensionError("mask index outside the bank");
    on[k] = 1;
  }
  for (int k = 0; k < M; ++k)
    if (!on[k] && frame.symbols.cols() > 0 && frame.symbols.row(k).cwiseAbs().maxCoeff() != 0.0)
      throw DimensionError("inactive subcarrier " + std::to_string(k) + " carries symbols");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(mask.size()), frame.symbols.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = frame.symbols.row(mask.active[i]);
  return modulate_active(X, bank, mask);
}

std::vector<double> modulate_active(const Eigen::MatrixXd& symbols, const ModulatedBank& bank, const ToneMask& mask) {
  const int M = bank.num_subbands();
  const int len = bank.filter_length();
  if (symbols.rows() != static_cast<Eigen::Index>(mask.size()))
    throw DimensionError("symbol matrix needs one row per active subcarrier");
  const auto S = static_cast<long>(symbols.cols());
  if (S == 0) throw DimensionError("frame holds no symbols");
  RowMatrix F(static_cast<Eigen::Index>(mask.size()), len);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.active[i] < 0 || mask.active[i] >= M) throw DimensionError("mask index outside the bank");
    F.row(static_cast<Eigen::Index>(i)) = bank.synth.row(mask.active[i]);
  }
  std::vector<double> out(static_cast<std::size_t>((S - 1) * M + len), 0.0);
  constexpr long kChunk = 4096;
  Eigen::MatrixXd W;
  for (long c0 = 0; c0 < S; c0 += kChunk) {
    const long nc = std::min(kChunk, S - c0);
    // Column j of W is symbol c0+j's contribution over its 2*kappa*M support.
    W.noalias() = F.transpose() * symbols.middleCols(c0, nc);
    for (long j = 0; j < nc; ++j) {
      double* dst = out.data() + (c0 + j) * M;
      for (int n = 0; n < len; ++n) dst[n] += W(n, j);
    }
  }
  return out;
}

Demodulated demodulate(std::span<const double> y, const ModulatedBank& bank, int beta, const ToneMask& mask) {
  const int M = bank.num_subbands();
  const int N = bank.order();
  if (beta < 0) throw ParameterError("beta", "must be non-negative");
  for (int k : mask.active)
    if (k < 0 || k >= M) throw DimensionError("mask index outside the bank");
  const long len = static_cast<long>(y.size());
  const long first = (N + beta + M - 1) / M;
  const long last = len - 1 + beta >= 0 ? (len - 1 + beta) / M : -1;
  if (last < first)
    throw DimensionError("stream of " + std::to_string(len) + " samples is shorter than one filter length");
  const long count = last - first + 1;

  // h_i[t] = f_i[N - t], so y^c_n is the synthesis filter dotted with a forward window.
  const auto nk = static_cast<Eigen::Index>(mask.size());
  RowMatrix C(nk, N + 1), Sr(nk, N + 1);
  for (Eigen::Index i = 0; i < nk; ++i) {
    const int k = mask.active[i];
    C.row(i) = bank.analysis_cos.row(k).reverse();
    Sr.row(i) = bank.analysis_sin.row(k).reverse();
  }
  Demodulated out;
  out.subcarriers = mask.active;
  out.first_symbol = static_cast<int>(first);
  out.cos.resize(nk, count);
  out.sin.resize(nk, count);
  constexpr long kChunk = 2048;
  Eigen::MatrixXd win;
  for (long c0 = 0; c0 < count; c0 += kChunk) {
    const long nc = std::min(kChunk, count - c0);
    win.resize(N + 1, nc);
    for (long j = 0; j < nc; ++j) {
      const long start = (first + c0 + j) * M - beta - N;
      for (int t = 0; t <= N; ++t) win(t, j) = y[static_cast<std::size_t>(start + t)];
    }
    out.cos.middleCols(c0, nc).noalias() = C * win;
    out.sin.middleCols(c0, nc).noalias() = Sr * win;
  }
  return out;
}

EqualizerTaps identity_taps(const ToneMask& mask, int order) {
  if (order < 0) throw ParameterError("order", "must be non-negative");
  EqualizerTaps t;
  t.order = order;
  t.subcarriers = mask.active;
  const auto nk = static_cast<Eigen::Index>(mask.size());
  t.c = Eigen::MatrixXd::Zero(nk, 2 * order + 1);
  t.s = Eigen::MatrixXd::Zero(nk, 2 * order + 1);
  t.c.col(order).setOnes();
  t.clamped.assign(mask.size(), false);
  return t;
}

EqualizerTaps select_rows(const EqualizerTaps& taps, std::span<const std::size_t> rows) {
  EqualizerTaps out;
  out.order = taps.order;
  out.c.resize(static_cast<Eigen::Index>(rows.size()), taps.c.cols());
  out.s.resize(static_cast<Eigen::Index>(rows.size()), taps.s.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= taps.subcarriers.size()) throw DimensionError("equalizer row out of range");
    out.subcarriers.push_back(taps.subcarriers[rows[i]]);
    out.c.row(static_cast<Eigen::Index>(i)) = taps.c.row(static_cast<Eigen::Index>(rows[i]));
    out.s.row(static_cast<Eigen::Index>(i)) = taps.s.row(static_cast<Eigen::Index>(rows[i]));
    out.clamped.push_back(rows[i] < taps.clamped.size() && taps.clamped[rows[i]]);
  }
  return out;
}

Equalized apply_ascet(const Demodulated& y, const EqualizerTaps& taps) {
  const int L = taps.order;
  if (L < 0) throw ParameterError("order", "must be non-negative");
  if (taps.subcarriers != y.subcarriers)
    throw DimensionError("equalizer subcarriers differ from the demodulated set");
  const auto nk = static_cast<Eigen::Index>(y.subcarriers.size());
  if (taps.c.rows() != nk || taps.s.rows() != nk || taps.c.cols() != 2 * L + 1 || taps.s.cols() != 2 * L + 1)
    throw DimensionError("equalizer tap matrices must be |K| x (2L+1)");
  const Eigen::Index count = y.cos.cols() - 2 * L;
  if (count <= 0)
    throw DimensionError("need at least " + std::to_string(2 * L + 1) + " demodulated symbols of context");
  Equalized out;
  out.subcarriers = y.subcarriers;
  out.first_symbol = y.first_symbol + L;
  out.symbols = Eigen::MatrixXd::Zero(nk, count);
  for (int mu = -L; mu <= L; ++mu) {
    // Estimate j (symbol first+L+j) reads demodulated column j + L - mu.
    const Eigen::Index src = L - mu;
    out.symbols += y.cos.middleCols(src, count).cwiseProduct(taps.c.col(mu + L).replicate(1, count));
    out.symbols += y.sin.middleCols(src, count).cwiseProduct(taps.s.col(mu + L).replicate(1, count));
  }
  return out;
}

}  // namespace eltmcm
