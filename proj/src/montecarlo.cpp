#include "eltmcm/montecarlo.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "eltmcm/error.hpp"
#include "eltmcm/fft.hpp"
#include "eltmcm/random.hpp"

namespace eltmcm {

namespace {

// Passes a symbol frame through the channel (delayed by beta), adds optional
// noise, demodulates the rows in `rx` and equalizes them.
Equalized run_link(const Eigen::MatrixXd& symbols, const ModulatedBank& bank, const ToneMask& tx,
                   const ChannelRealization& ch, int beta, const ToneMask& rx, const EqualizerTaps& taps,
                   std::span<const double> noise) {
  const auto x = modulate_active(symbols, bank, tx);
  std::vector<double> y(static_cast<std::size_t>(beta), 0.0);
  const auto ax = fft::convolve(x, ch.taps);
  y.insert(y.end(), ax.begin(), ax.end());
  for (std::size_t i = 0; i < y.size() && i < noise.size(); ++i) y[i] += noise[i];
  return apply_ascet(demodulate(y, bank, 0, rx), taps);
}

std::vector<double> shaped_noise(std::span<const double> b, std::size_t length, std::uint64_t seed,
                                 std::uint64_t index) {
  auto rng = make_rng(seed, SeedLane::monte_carlo, index);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> w(length + b.size() - 1);
  for (double& v : w) v = normal(rng);
  const auto full = fft::convolve(w, b);
  return std::vector<double>(full.begin() + static_cast<long>(b.size()) - 1,
                             full.begin() + static_cast<long>(b.size() - 1 + length));
}

struct Window {
  long lo, hi;  // inclusive range of estimate indices with full symbol context
};

// Estimates n whose contributing symbols m in [n - D + dmin, n - D + dmax] all lie in [0, S).
Window steady_state(const Equalized& eq, long S, long D, long dmin, long dmax) {
  Window w;
  w.lo = std::max<long>(eq.first_symbol, D - dmin);
  w.hi = std::min<long>(eq.first_symbol + eq.symbols.cols() - 1, S - 1 + D - dmax);
  if (w.hi < w.lo) throw DimensionError("simulation frame too short for the kernel support");
  return w;
}

}  // namespace

Eigen::MatrixXd random_pam(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, std::uint64_t index) {
  auto rng = make_rng(seed, SeedLane::symbols, index);
  std::uniform_int_distribution<int> pick(0, 3);
  const double scale = 1.0 / std::sqrt(5.0);
  Eigen::MatrixXd X(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) X(i, j) = (2 * pick(rng) - 3) * scale;
  return X;
}

KernelTable measure_kernel(const ModulatedBank& bank, const ChannelRealization& ch, const Alignment& alignment,
                           const ToneMask& mask) {
  const int M = bank.num_subbands();
  const int N = bank.order();
  const long tau = alignment.total_delay(M);
  const long lg = bank.filter_length() + static_cast<long>(ch.taps.size()) - 1;
  auto floor_div = [](long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  KernelTable t;
  t.subcarriers = mask.active;
  t.alignment = alignment;
  t.max_offset = static_cast<int>(floor_div(tau, M));
  t.min_offset = static_cast<int>(-floor_div(-(tau - (N + lg - 1)), M));
  const long span = t.max_offset - t.min_offset + 1;
  const long S = 4 * span + 4 * bank.overlap() + 8;
  const long m0 = S / 2;
  const auto nk = static_cast<Eigen::Index>(mask.size());
  for (long d = t.min_offset; d <= t.max_offset; ++d) {
    t.qc.emplace_back(Eigen::MatrixXd::Zero(nk, nk));
    t.qs.emplace_back(Eigen::MatrixXd::Zero(nk, nk));
  }
  for (Eigen::Index j = 0; j < nk; ++j) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(nk, S);
    X(j, m0) = 1.0;
    const auto x = modulate_active(X, bank, mask);
    std::vector<double> y(static_cast<std::size_t>(alignment.beta), 0.0);
    const auto ax = fft::convolve(x, ch.taps);
    y.insert(y.end(), ax.begin(), ax.end());
    const auto r = demodulate(y, bank, 0, mask);
    for (long d = t.min_offset; d <= t.max_offset; ++d) {
      const long n = m0 + alignment.symbol_delay - d;
      const long col = n - r.first_symbol;
      if (col < 0 || col >= r.cos.cols()) throw DimensionError("measurement frame too short");
      const auto idx = static_cast<std::size_t>(d - t.min_offset);
      t.qc[idx].col(j) = r.cos.col(col);
      t.qs[idx].col(j) = r.sin.col(col);
    }
  }
  return t;
}

MonteCarloPowers simulate_elt_powers(const ModulatedBank& bank, const ChannelRealization& ch,
                                     const Alignment& alignment, const ToneMask& mask, const EqualizerTaps& taps,
                                     std::span<const double> noise_taps, const MonteCarloOptions& options) {
  const int M = bank.num_subbands();
  const int N = bank.order();
  const int L = taps.order;
  const long D = alignment.symbol_delay;
  const long tau = alignment.total_delay(M);
  const long lg = bank.filter_length() + static_cast<long>(ch.taps.size()) - 1;
  auto floor_div = [](long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  const long dmax = floor_div(tau, M) + L;
  const long dmin = -floor_div(-(tau - (N + lg - 1)), M) - L;
  const long span = dmax - dmin + 1;
  const auto nk = mask.size();
  const long n_est = static_cast<long>(options.num_symbols);
  if (n_est < 2) throw ParameterError("num_symbols", "need at least two symbols");

  MonteCarloPowers out;
  out.subcarriers = mask.active;
  out.signal.assign(nk, 0.0);
  out.isi.assign(nk, 0.0);
  out.ici.assign(nk, 0.0);
  out.noise.assign(nk, 0.0);
  out.own_gain.assign(nk, 0.0);
  out.sinr.assign(nk, 0.0);

  for (std::size_t i = 0; i < nk; ++i) {
    const ToneMask single{{mask.active[i]}};
    const std::size_t row[] = {i};
    const auto tap_i = select_rows(taps, row);

    // Signal: isolated symbols spaced beyond the kernel support.
    {
      const long G = span + 1;
      const long S = n_est * G + span;
      Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, S);
      const auto vals = random_pam(1, n_est, options.seed, 4 * i);
      for (long j = 0; j < n_est; ++j) X(0, span + j * G) = vals(0, j);
      const auto eq = run_link(X, bank, single, ch, alignment.beta, single, tap_i, {});
      double acc = 0.0, cross = 0.0, energy = 0.0;
      for (long j = 0; j < n_est; ++j) {
        const long col = span + j * G + D - eq.first_symbol;
        if (col < 0 || col >= eq.symbols.cols()) throw DimensionError("signal frame too short");
        const double v = eq.symbols(0, col);
        acc += v * v;
        cross += v * vals(0, j);
        energy += vals(0, j) * vals(0, j);
      }
      out.signal[i] = acc / static_cast<double>(n_est);
      out.own_gain[i] = cross / energy;
    }
    const double g = out.own_gain[i];

    // ISI: only this subcarrier transmits; subtract the measured own response.
    {
      const long S = n_est + 2 * span;
      const auto X = random_pam(1, S, options.seed, 4 * i + 1);
      const auto eq = run_link(X, bank, single, ch, alignment.beta, single, tap_i, {});
      const auto w = steady_state(eq, S, D, dmin, dmax);
      double acc = 0.0;
      for (long n = w.lo; n <= w.hi; ++n) {
        const double e = eq.symbols(0, n - eq.first_symbol) - g * X(0, n - D);
        acc += e * e;
      }
      out.isi[i] = acc / static_cast<double>(w.hi - w.lo + 1);
    }

    // ICI: every other active subcarrier transmits, this one stays silent.
    if (nk > 1) {
      const long S = n_est + 2 * span;
      Eigen::MatrixXd X = random_pam(static_cast<Eigen::Index>(nk), S, options.seed, 4 * i + 2);
      X.row(static_cast<Eigen::Index>(i)).setZero();
      const auto eq = run_link(X, bank, mask, ch, alignment.beta, single, tap_i, {});
      const auto w = steady_state(eq, S, D, dmin, dmax);
      double acc = 0.0;
      for (long n = w.lo; n <= w.hi; ++n) {
        const double v = eq.symbols(0, n - eq.first_symbol);
        acc += v * v;
      }
      out.ici[i] = acc / static_cast<double>(w.hi - w.lo + 1);
    }
  }

  // Noise: equalized noise-only stream.
  if (!noise_taps.empty()) {
    const long S = static_cast<long>(options.num_noise_symbols) + 2 * span + 2 * L;
    const auto r = shaped_noise(noise_taps, static_cast<std::size_t>(S * M), options.seed, 1u << 20);
    const auto eq = apply_ascet(demodulate(r, bank, 0, mask), taps);
    for (std::size_t i = 0; i < nk; ++i)
      out.noise[i] = eq.symbols.row(static_cast<Eigen::Index>(i)).squaredNorm() / static_cast<double>(eq.symbols.cols());
  }

  // SINR from the error vector of a fully loaded, noisy frame.
  {
    const long S = n_est + 2 * span;
    const auto X = random_pam(static_cast<Eigen::Index>(nk), S, options.seed, (1u << 20) + 1);
    const long len = alignment.beta + (S - 1) * M + bank.filter_length() + static_cast<long>(ch.taps.size()) - 1;
    const auto r = noise_taps.empty() ? std::vector<double>{}
                                      : shaped_noise(noise_taps, static_cast<std::size_t>(len), options.seed, (1u << 20) + 2);
    const auto eq = run_link(X, bank, mask, ch, alignment.beta, mask, taps, r);
    const auto w = steady_state(eq, S, D, dmin, dmax);
    for (std::size_t i = 0; i < nk; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      double err = 0.0, sig = 0.0;
      for (long n = w.lo; n <= w.hi; ++n) {
        const double want = out.own_gain[i] * X(row, n - D);
        const double e = eq.symbols(row, n - eq.first_symbol) - want;
        err += e * e;
        sig += want * want;
      }
      out.sinr[i] = err > 0.0 ? sig / err : std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

std::vector<double> simulate_wofdm_interference(const WofdmConfig& cfg, const ChannelRealization& ch,
                                                const MonteCarloOptions& options) {
  validate(cfg);
  using cplx = std::complex<double>;
  const auto nk = static_cast<Eigen::Index>(cfg.active.size());
  const long P = cfg.period();
  const long margin = (cfg.pulse_length() + static_cast<long>(ch.taps.size())) / P + 2;
  const long S = static_cast<long>(options.num_symbols) + 2 * margin;
  auto rng = make_rng(options.seed, SeedLane::symbols, 7);
  std::uniform_int_distribution<int> bit(0, 1);
  const double a = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXcd X(nk, S);
  for (long m = 0; m < S; ++m)
    for (Eigen::Index i = 0; i < nk; ++i) X(i, m) = cplx((2 * bit(rng) - 1) * a, (2 * bit(rng) - 1) * a);

  // Own response per subcarrier. A real transmit stream answers symbol X with
  // alpha X + gamma conj(X); probing with 1 and j separates alpha from the image gamma.
  std::vector<cplx> own(static_cast<std::size_t>(nk));
  auto probe = [&](Eigen::Index i, cplx v) {
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(nk, 2 * margin + 1);
    U(i, margin) = v;
    return wofdm_demodulate(fft::convolve(wofdm_modulate(U, cfg), ch.taps), cfg)(i, margin);
  };
  for (Eigen::Index i = 0; i < nk; ++i)
    own[static_cast<std::size_t>(i)] = 0.5 * (probe(i, 1.0) - cplx(0.0, 1.0) * probe(i, cplx(0.0, 1.0)));
  const auto Y = wofdm_demodulate(fft::convolve(wofdm_modulate(X, cfg), ch.taps), cfg);
  std::vector<double> out(static_cast<std::size_t>(nk), 0.0);
  const long hi = std::min<long>(S - margin, Y.cols());
  for (Eigen::Index i = 0; i < nk; ++i) {
    double acc = 0.0;
    for (long m = margin; m < hi; ++m) acc += std::norm(Y(i, m) - own[static_cast<std::size_t>(i)] * X(i, m));
    out[static_cast<std::size_t>(i)] = acc / static_cast<double>(hi - margin);
  }
  return out;
}

}  // namespace eltmcm
