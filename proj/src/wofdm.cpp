#include "eltmcm/wofdm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "eltmcm/error.hpp"
#include "eltmcm/fft.hpp"

namespace eltmcm {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Complex pulse of subcarrier k: e^{j 2 pi k (n - GI)/M} w[n] / sqrt(M).
std::vector<cplx> pulse(const WofdmConfig& cfg, const std::vector<double>& w, int k) {
  const int M = cfg.fft_size;
  std::vector<cplx> p(w.size());
  for (std::size_t n = 0; n < w.size(); ++n) {
    const long phase = (static_cast<long>(k) * (static_cast<long>(n) - cfg.guard)) % M;
    p[n] = std::polar(w[n] / std::sqrt(static_cast<double>(M)), 2.0 * kPi * static_cast<double>(phase) / M);
  }
  return p;
}

long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace

void validate(const WofdmConfig& cfg) {
  if (cfg.fft_size < 4 || (cfg.fft_size & (cfg.fft_size - 1)) != 0)
    throw ParameterError("fft_size", "must be a power of two >= 4");
  if (cfg.guard < 0) throw ParameterError("guard", "must be >= 0");
  if (cfg.rolloff < 0 || cfg.rolloff > cfg.guard) throw ParameterError("rolloff", "must lie in [0, guard]");
  if (cfg.timing_offset < 0 || cfg.timing_offset > cfg.guard)
    throw ParameterError("timing_offset", "must lie in [0, guard]");
  for (std::size_t i = 0; i < cfg.active.size(); ++i) {
    const int k = cfg.active.active[i];
    if (k <= 0 || 2 * k >= cfg.fft_size)
      throw ParameterError("active", "index " + std::to_string(k) + " outside (0, M/2) needed for Hermitian loading");
    if (i > 0 && k <= cfg.active.active[i - 1]) throw ParameterError("active", "indices must be strictly increasing");
  }
  if (!(cfg.spacing > 0.0)) throw ParameterError("spacing", "must be positive");
}

std::vector<double> wofdm_window(const WofdmConfig& cfg) {
  validate(cfg);
  const int RO = cfg.rolloff;
  std::vector<double> w(static_cast<std::size_t>(cfg.pulse_length()), 1.0);
  for (int i = 0; i < RO; ++i) {
    const double r = 0.5 * (1.0 - std::cos(kPi * (i + 0.5) / RO));
    w[static_cast<std::size_t>(i)] = r;
    w[static_cast<std::size_t>(cfg.pulse_length() - 1 - i)] = r;
  }
  return w;
}

std::vector<cplx> wofdm_channel_response(const WofdmConfig& cfg, const ChannelRealization& ch) {
  validate(cfg);
  const int M = cfg.fft_size;
  std::vector<cplx> H;
  for (int k : cfg.active.active) {
    cplx acc{0.0, 0.0};
    for (std::size_t l = 0; l < ch.taps.size(); ++l)
      acc += ch.taps[l] * std::polar(1.0, -2.0 * kPi * static_cast<double>((static_cast<long>(k) * static_cast<long>(l)) % M) / M);
    H.push_back(acc);
  }
  return H;
}

WofdmSinrProfile wofdm_sinr(const WofdmConfig& cfg, const ChannelRealization& ch, std::span<const double> b,
                            double symbol_variance) {
  validate(cfg);
  if (ch.taps.empty()) throw DimensionError("channel has no taps");
  if (std::abs(ch.sample_rate - cfg.sample_rate()) > 1e-9 * cfg.sample_rate())
    throw ParameterError("sample_rate", "channel rate must equal fft_size * spacing");
  if (!(symbol_variance >= 0.0)) throw ParameterError("symbol_variance", "must be >= 0");
  const int M = cfg.fft_size;
  const int P = cfg.period();
  const auto& K = cfg.active.active;
  const auto nk = K.size();
  const auto w = wofdm_window(cfg);

  // Channel-filtered pulses q_k = a * p_k.
  std::vector<std::vector<cplx>> q(nk);
  double energy = 0.0;
  for (std::size_t i = 0; i < nk; ++i) {
    q[i] = fft::convolve(pulse(cfg, w, K[i]), ch.taps);
    for (const cplx& v : q[i]) energy += std::norm(v);
  }
  const long lq = static_cast<long>(q.empty() ? 0 : q[0].size());
  const long start0 = cfg.guard + cfg.timing_offset;

  WofdmSinrProfile out;
  out.subcarriers = K;
  out.symbol_variance = symbol_variance;
  out.received_power = 2.0 * symbol_variance * energy / P;
  out.signal_gain.assign(nk, 0.0);
  out.interference.assign(nk, 0.0);
  // A receiver window at symbol offset d reads q over [dP + start0, dP + start0 + M).
  const long dlo = floor_div(-start0 - (M - 1), P);
  const long dhi = floor_div(lq - 1 - start0, P) + 1;
  std::vector<cplx> win(static_cast<std::size_t>(M));
  const double unitary = 1.0 / std::sqrt(static_cast<double>(M));
  for (long d = dlo; d <= dhi; ++d) {
    const long st = d * P + start0;
    const long lo = std::max(st, 0L);
    const long hi = std::min(st + M, lq);
    if (hi <= lo) continue;
    for (std::size_t i = 0; i < nk; ++i) {
      std::fill(win.begin(), win.end(), cplx{0.0, 0.0});
      for (long n = lo; n < hi; ++n) win[static_cast<std::size_t>(n - st)] = q[i][static_cast<std::size_t>(n)];
      const auto Y = fft::dft(win, static_cast<std::size_t>(M));
      for (std::size_t j = 0; j < nk; ++j) {
        const cplx alpha = Y[static_cast<std::size_t>(K[j])] * unitary;
        const cplx image = std::conj(Y[static_cast<std::size_t>(M - K[j])] * unitary);
        double p = std::norm(alpha) + std::norm(image);
        if (d == 0 && i == j) {
          out.signal_gain[j] = std::norm(alpha);
          p -= std::norm(alpha);
        }
        out.interference[j] += p;
      }
    }
  }

  const auto H = wofdm_channel_response(cfg, ch);
  const auto R = autocorrelation(b);
  out.channel_gain.resize(nk);
  out.noise.resize(nk);
  out.sinr.resize(nk);
  out.unusable.assign(nk, false);
  for (std::size_t j = 0; j < nk; ++j) {
    out.channel_gain[j] = std::norm(H[j]);
    double nv = R.empty() ? 0.0 : R[0];
    for (std::size_t l = 1; l < R.size() && l < static_cast<std::size_t>(M); ++l)
      nv += 2.0 * R[l] * (1.0 - static_cast<double>(l) / M) *
            std::cos(2.0 * kPi * static_cast<double>((static_cast<long>(K[j]) * static_cast<long>(l)) % M) / M);
    out.noise[j] = std::max(nv, 0.0);
    out.interference[j] *= symbol_variance;
    if (std::abs(H[j]) < 1e-12) {
      out.unusable[j] = true;
      out.sinr[j] = 0.0;
      continue;
    }
    const double num = symbol_variance * out.signal_gain[j];
    const double den = out.noise[j] + out.interference[j];
    out.sinr[j] = den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  }
  return out;
}

WofdmSinrProfile wofdm_sinr(const WofdmConfig& cfg, const ChannelRealization& ch, const NoiseModel& noise,
                            double symbol_variance) {
  const auto b = noise_filter(noise, cfg.sample_rate());
  return wofdm_sinr(cfg, ch, b, symbol_variance);
}

double wofdm_received_power(const WofdmConfig& cfg, const ChannelRealization& ch, double symbol_variance) {
  const auto w = wofdm_window(cfg);
  double acc = 0.0;
  for (int k : cfg.active.active)
    for (const cplx& v : fft::convolve(pulse(cfg, w, k), ch.taps)) acc += std::norm(v);
  return 2.0 * symbol_variance * acc / cfg.period();
}

double wofdm_inband_noise(std::span<const double> b, const WofdmConfig& cfg) {
  validate(cfg);
  const auto R = autocorrelation(b);
  const double step = 2.0 * kPi / cfg.fft_size;
  double acc = 0.0;
  for (int k : cfg.active.active) acc += band_power_from_autocorrelation(R, (k - 0.5) * step, (k + 0.5) * step);
  return acc;
}

std::vector<double> wofdm_modulate(const Eigen::MatrixXcd& symbols, const WofdmConfig& cfg) {
  validate(cfg);
  const int M = cfg.fft_size;
  const int P = cfg.period();
  const auto& K = cfg.active.active;
  if (symbols.rows() != static_cast<Eigen::Index>(K.size()))
    throw DimensionError("symbol matrix needs one row per active subcarrier");
  const auto S = static_cast<long>(symbols.cols());
  if (S == 0) throw DimensionError("frame holds no symbols");
  const auto w = wofdm_window(cfg);
  std::vector<double> out(static_cast<std::size_t>((S - 1) * P + cfg.pulse_length()), 0.0);
  std::vector<cplx> spec(static_cast<std::size_t>(M));
  const double gain = std::sqrt(static_cast<double>(M));
  for (long m = 0; m < S; ++m) {
    std::fill(spec.begin(), spec.end(), cplx{0.0, 0.0});
    for (std::size_t i = 0; i < K.size(); ++i) {
      const cplx X = symbols(static_cast<Eigen::Index>(i), m);
      spec[static_cast<std::size_t>(K[i])] = X;
      spec[static_cast<std::size_t>(M - K[i])] = std::conj(X);
    }
    const auto s = fft::idft(spec, static_cast<std::size_t>(M));
    for (int n = 0; n < cfg.pulse_length(); ++n) {
      const int j = ((n - cfg.guard) % M + M) % M;
      out[static_cast<std::size_t>(m * P + n)] += s[static_cast<std::size_t>(j)].real() * gain * w[static_cast<std::size_t>(n)];
    }
  }
  return out;
}

Eigen::MatrixXcd wofdm_demodulate(std::span<const double> y, const WofdmConfig& cfg,
                                  std::span<const cplx> equalizer) {
  validate(cfg);
  const int M = cfg.fft_size;
  const int P = cfg.period();
  const auto& K = cfg.active.active;
  if (!equalizer.empty() && equalizer.size() != K.size())
    throw DimensionError("equalizer needs one coefficient per active subcarrier");
  const long start0 = cfg.guard + cfg.timing_offset;
  const long len = static_cast<long>(y.size());
  if (len < start0 + M) throw DimensionError("stream shorter than one receiver window");
  const long count = (len - start0 - M) / P + 1;
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(K.size()), count);
  std::vector<cplx> win(static_cast<std::size_t>(M));
  const double unitary = 1.0 / std::sqrt(static_cast<double>(M));
  for (long m = 0; m < count; ++m) {
    for (int n = 0; n < M; ++n) win[static_cast<std::size_t>(n)] = y[static_cast<std::size_t>(m * P + start0 + n)];
    const auto Y = fft::dft(win, static_cast<std::size_t>(M));
    for (std::size_t i = 0; i < K.size(); ++i) {
      cplx v = Y[static_cast<std::size_t>(K[i])] * unitary;
      if (!equalizer.empty()) v /= equalizer[i];
      out(static_cast<Eigen::Index>(i), m) = v;
    }
  }
  return out;
}

}  // namespace eltmcm
