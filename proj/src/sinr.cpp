#include "eltmcm/sinr.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "eltmcm/error.hpp"
#include "eltmcm/fft.hpp"

namespace eltmcm {

namespace {

using cplx = std::complex<double>;

void check_mask(const ModulatedBank& bank, const ToneMask& mask) {
  for (int k : mask.active)
    if (k < 0 || k >= bank.num_subbands()) throw DimensionError("mask index outside the bank");
}

// Summed own-subcarrier energy of the cascade as a function of lag tau.
std::vector<double> own_energy_by_lag(const ModulatedBank& bank, const RowMatrix& g, const ToneMask& mask) {
  const int len = bank.filter_length();
  std::vector<double> score;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const int k = mask.active[i];
    const std::span<const double> gi(g.row(static_cast<Eigen::Index>(i)).data(), static_cast<std::size_t>(g.cols()));
    const std::span<const double> hc(bank.analysis_cos.row(k).data(), static_cast<std::size_t>(len));
    const std::span<const double> hs(bank.analysis_sin.row(k).data(), static_cast<std::size_t>(len));
    const auto rc = fft::convolve(hc, gi);
    const auto rs = fft::convolve(hs, gi);
    if (score.empty()) score.assign(rc.size(), 0.0);
    for (std::size_t t = 0; t < rc.size(); ++t) score[t] += rc[t] * rc[t] + rs[t] * rs[t];
  }
  return score;
}

Alignment from_lag(long tau, int M) {
  Alignment a;
  const long D = tau >= 0 ? (tau + M - 1) / M : -((-tau) / M);
  a.symbol_delay = static_cast<int>(D);
  a.beta = static_cast<int>(D * M - tau);
  return a;
}

struct Terms {
  std::vector<double> signal, isi, ici;
};

void check_taps(const KernelTable& q, const EqualizerTaps& taps) {
  if (taps.subcarriers != q.subcarriers) throw DimensionError("equalizer subcarriers differ from the kernel table");
  const auto nk = static_cast<Eigen::Index>(q.subcarriers.size());
  const int L = taps.order;
  if (L < 0 || taps.c.rows() != nk || taps.s.rows() != nk || taps.c.cols() != 2 * L + 1 ||
      taps.s.cols() != 2 * L + 1)
    throw DimensionError("equalizer tap matrices must be |K| x (2L+1)");
}

Terms power_terms(const KernelTable& q, const EqualizerTaps& taps, double var, PowerForm form) {
  check_taps(q, taps);
  if (!(var >= 0.0)) throw ParameterError("symbol_variance", "must be >= 0");
  const auto nk = static_cast<Eigen::Index>(q.subcarriers.size());
  const int L = taps.order;
  Terms t;
  t.signal.assign(static_cast<std::size_t>(nk), 0.0);
  t.isi.assign(static_cast<std::size_t>(nk), 0.0);
  t.ici.assign(static_cast<std::size_t>(nk), 0.0);
  if (nk == 0) return t;

  auto accumulate = [&](const Eigen::MatrixXd& comb, bool is_signal_offset) {
    for (Eigen::Index i = 0; i < nk; ++i) {
      const double own = comb(i, i);
      const double row = comb.row(i).squaredNorm();
      if (is_signal_offset)
        t.signal[i] += own * own;
      else
        t.isi[i] += own * own;
      t.ici[i] += row - own * own;
    }
  };

  Eigen::MatrixXd comb(nk, nk);
  if (form == PowerForm::exact) {
    // comb(d) = sum_mu diag(c_mu) Qc(d + mu) + diag(s_mu) Qs(d + mu)
    for (int d = q.min_offset - L; d <= q.max_offset + L; ++d) {
      comb.setZero();
      for (int mu = -L; mu <= L; ++mu) {
        if (!q.has_offset(d + mu)) continue;
        comb.noalias() += taps.c.col(mu + L).asDiagonal() * q.cos_at(d + mu);
        comb.noalias() += taps.s.col(mu + L).asDiagonal() * q.sin_at(d + mu);
      }
      accumulate(comb, d == 0);
    }
  } else {
    for (int mu = -L; mu <= L; ++mu)
      for (int d = q.min_offset; d <= q.max_offset; ++d) {
        comb.noalias() = taps.c.col(mu + L).asDiagonal() * q.cos_at(d);
        comb.noalias() += taps.s.col(mu + L).asDiagonal() * q.sin_at(d);
        accumulate(comb, d == mu);
      }
  }
  for (auto* v : {&t.signal, &t.isi, &t.ici})
    for (double& x : *v) x *= var;
  return t;
}

}  // namespace

const Eigen::MatrixXd& KernelTable::cos_at(int d) const {
  if (!has_offset(d)) throw DimensionError("kernel offset " + std::to_string(d) + " outside the stored support");
  return qc[static_cast<std::size_t>(d - min_offset)];
}

const Eigen::MatrixXd& KernelTable::sin_at(int d) const {
  if (!has_offset(d)) throw DimensionError("kernel offset " + std::to_string(d) + " outside the stored support");
  return qs[static_cast<std::size_t>(d - min_offset)];
}

double KernelTable::cos(std::size_t i, std::size_t j, int d) const {
  if (!has_offset(d)) return 0.0;
  return cos_at(d)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

double KernelTable::sin(std::size_t i, std::size_t j, int d) const {
  if (!has_offset(d)) return 0.0;
  return sin_at(d)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

RowMatrix cascade_filters(const ModulatedBank& bank, const ChannelRealization& ch, const ToneMask& mask) {
  check_mask(bank, mask);
  if (ch.taps.empty()) throw DimensionError("channel has no taps");
  const int len = bank.filter_length();
  const auto lg = static_cast<Eigen::Index>(len + ch.taps.size() - 1);
  RowMatrix g(static_cast<Eigen::Index>(mask.size()), lg);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const std::span<const double> f(bank.synth.row(mask.active[i]).data(), static_cast<std::size_t>(len));
    const auto gi = fft::convolve(f, ch.taps);
    for (Eigen::Index t = 0; t < lg; ++t) g(static_cast<Eigen::Index>(i), t) = gi[static_cast<std::size_t>(t)];
  }
  return g;
}

Alignment choose_alignment(const ModulatedBank& bank, const ChannelRealization& ch, const ToneMask& mask) {
  if (mask.empty()) throw ParameterError("mask", "no active subcarriers");
  const int M = bank.num_subbands();
  const auto score = own_energy_by_lag(bank, cascade_filters(bank, ch, mask), mask);
  long best = 0;
  for (long tau = 1; tau < static_cast<long>(score.size()); ++tau) {
    const double s = score[static_cast<std::size_t>(tau)];
    const double b = score[static_cast<std::size_t>(best)];
    if (s > b || (s == b && from_lag(tau, M).beta < from_lag(best, M).beta)) best = tau;
  }
  return from_lag(best, M);
}

int choose_beta(const ModulatedBank& bank, const ChannelRealization& ch, const ToneMask& mask) {
  return choose_alignment(bank, ch, mask).beta;
}

Alignment alignment_for_beta(const ModulatedBank& bank, const ChannelRealization& ch, const ToneMask& mask, int beta) {
  const int M = bank.num_subbands();
  if (beta < 0 || beta >= M) throw ParameterError("beta", "must lie in [0, num_subbands)");
  if (mask.empty()) throw ParameterError("mask", "no active subcarriers");
  const auto score = own_energy_by_lag(bank, cascade_filters(bank, ch, mask), mask);
  Alignment best{beta, (beta + M - 1) / M};
  double best_score = -1.0;
  for (long D = (beta + M - 1) / M;; ++D) {
    const long tau = D * M - beta;
    if (tau >= static_cast<long>(score.size())) break;
    if (score[static_cast<std::size_t>(tau)] > best_score) {
      best_score = score[static_cast<std::size_t>(tau)];
      best.symbol_delay = static_cast<int>(D);
    }
  }
  return best;
}

KernelTable kernel_q(const ModulatedBank& bank, const ChannelRealization& ch, const Alignment& alignment,
                     const ToneMask& mask) {
  if (alignment.beta < 0) throw ParameterError("beta", "must be non-negative");
  check_mask(bank, mask);
  const int M = bank.num_subbands();
  const int N = bank.order();
  const RowMatrix g = cascade_filters(bank, ch, mask);
  const auto nk = static_cast<Eigen::Index>(mask.size());
  const long lg = static_cast<long>(g.cols());
  const long tau = alignment.total_delay(M);

  // Q(d)[i][j] = sum_t h_i[t] g_j[tau - dM - t] = sum_u f_i[u] g_j[tau - dM - N + u]
  RowMatrix F(nk, N + 1), S(nk, N + 1);
  for (Eigen::Index i = 0; i < nk; ++i) {
    F.row(i) = bank.analysis_cos.row(mask.active[i]).reverse();
    S.row(i) = bank.analysis_sin.row(mask.active[i]).reverse();
  }
  const long pad = N + 1;
  RowMatrix gpad = RowMatrix::Zero(nk, lg + 2 * pad);
  gpad.middleCols(pad, lg) = g;

  auto floor_div = [](long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  KernelTable table;
  table.subcarriers = mask.active;
  table.alignment = alignment;
  table.max_offset = static_cast<int>(floor_div(tau, M));
  table.min_offset = static_cast<int>(-floor_div(-(tau - (N + lg - 1)), M));
  for (int d = table.min_offset; d <= table.max_offset; ++d) {
    const long start = tau - static_cast<long>(d) * M - N + pad;
    const auto win = gpad.middleCols(start, N + 1);
    table.qc.emplace_back(F * win.transpose());
    table.qs.emplace_back(S * win.transpose());
  }
  return table;
}

KernelTable kernel_q(const ModulatedBank& bank, const ChannelRealization& ch, int beta, const ToneMask& mask) {
  if (beta < 0) throw ParameterError("beta", "must be non-negative");
  return kernel_q(bank, ch, alignment_for_beta(bank, ch, mask, beta), mask);
}

EqualizerTaps design_ascet(const ModulatedBank& bank, const ChannelRealization& ch, const Alignment& alignment,
                           const ToneMask& mask, int order) {
  if (order < 0) throw ParameterError("order", "must be non-negative");
  check_mask(bank, mask);
  if (ch.taps.empty()) throw DimensionError("channel has no taps");
  const int M = bank.num_subbands();
  const int N = bank.order();
  const long tau = alignment.total_delay(M);
  const int P = 2 * order + 1;
  const double pi = std::numbers::pi;

  EqualizerTaps taps = identity_taps(mask, order);
  taps.c.setZero();
  Eigen::MatrixXcd V(P, P);
  Eigen::VectorXcd rhs(P);
  for (std::size_t row = 0; row < mask.size(); ++row) {
    const int k = mask.active[row];
    bool clamped = false;
    for (int i = 0; i < P; ++i) {
      const double w = k * pi / M + (i + 0.5) * (pi / M) / P;
      cplx H{0.0, 0.0};
      for (std::size_t l = 0; l < ch.taps.size(); ++l) H += ch.taps[l] * std::polar(1.0, -w * static_cast<double>(l));
      H *= std::polar(1.0, w * static_cast<double>(tau - N));
      if (std::abs(H) < 1e-12) {
        H = std::abs(H) > 0.0 ? H / std::abs(H) * 1e-12 : cplx{1e-12, 0.0};
        clamped = true;
      }
      rhs(i) = 1.0 / H;
      // Tap mu acts on whole symbols, so it sees the channel at the aliased frequency M w.
      for (int mu = -order; mu <= order; ++mu) V(i, mu + order) = std::polar(1.0, -M * w * mu);
    }
    const Eigen::VectorXcd e = V.partialPivLu().solve(rhs);
    for (int j = 0; j < P; ++j) {
      taps.c(static_cast<Eigen::Index>(row), j) = e(j).real();
      taps.s(static_cast<Eigen::Index>(row), j) = e(j).imag();
    }
    taps.clamped[row] = clamped;
  }
  return taps;
}

EqualizerTaps design_ascet(const ModulatedBank& bank, const ChannelRealization& ch, const ToneMask& mask, int order) {
  return design_ascet(bank, ch, choose_alignment(bank, ch, mask), mask, order);
}

InterferencePowers interference_powers(const KernelTable& q, const EqualizerTaps& taps, double var, PowerForm form) {
  auto t = power_terms(q, taps, var, form);
  return {std::move(t.signal), std::move(t.isi), std::move(t.ici)};
}

std::vector<double> power_signal(const KernelTable& q, const EqualizerTaps& taps, double var, PowerForm form) {
  return power_terms(q, taps, var, form).signal;
}

std::vector<double> power_isi(const KernelTable& q, const EqualizerTaps& taps, double var, PowerForm form) {
  return power_terms(q, taps, var, form).isi;
}

std::vector<double> power_ici(const KernelTable& q, const EqualizerTaps& taps, double var, PowerForm form) {
  return power_terms(q, taps, var, form).ici;
}

std::vector<double> equalized_noise_filter(const ModulatedBank& bank, const EqualizerTaps& taps, std::size_t row) {
  if (row >= taps.subcarriers.size()) throw DimensionError("equalizer row out of range");
  const int M = bank.num_subbands();
  const int len = bank.filter_length();
  const int L = taps.order;
  const int k = taps.subcarriers[row];
  if (k < 0 || k >= M) throw DimensionError("equalizer subcarrier outside the bank");
  std::vector<double> out(static_cast<std::size_t>(len + 2 * L * M), 0.0);
  const auto r = static_cast<Eigen::Index>(row);
  for (int mu = -L; mu <= L; ++mu) {
    const double c = taps.c(r, mu + L);
    const double s = taps.s(r, mu + L);
    const std::size_t off = static_cast<std::size_t>(mu + L) * static_cast<std::size_t>(M);
    for (int t = 0; t < len; ++t) out[off + t] += c * bank.analysis_cos(k, t) + s * bank.analysis_sin(k, t);
  }
  return out;
}

std::vector<double> power_noise(const ModulatedBank& bank, const EqualizerTaps& taps, std::span<const double> b) {
  std::vector<double> out(taps.subcarriers.size(), 0.0);
  if (b.empty()) return out;
  for (std::size_t row = 0; row < out.size(); ++row) {
    const auto h = equalized_noise_filter(bank, taps, row);
    double acc = 0.0;
    if (b.size() == 1) {
      for (double v : h) acc += v * v;
      acc *= b[0] * b[0];
    } else {
      for (double v : fft::convolve(h, b)) acc += v * v;
    }
    out[row] = acc;
  }
  return out;
}

std::vector<double> power_noise(const ModulatedBank& bank, const EqualizerTaps& taps, const NoiseModel& noise,
                                double sample_rate) {
  const auto b = noise_filter(noise, sample_rate);
  return power_noise(bank, taps, b);
}

SinrProfile sinr(std::span<const double> signal, std::span<const double> isi, std::span<const double> ici,
                 std::span<const double> noise) {
  const std::size_t n = signal.size();
  if (isi.size() != n || ici.size() != n || noise.size() != n)
    throw DimensionError("power vectors must cover the same subcarriers");
  SinrProfile p;
  p.signal.assign(signal.begin(), signal.end());
  p.isi.assign(isi.begin(), isi.end());
  p.ici.assign(ici.begin(), ici.end());
  p.noise.assign(noise.begin(), noise.end());
  p.sinr.resize(n);
  p.undefined.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : {signal[i], isi[i], ici[i], noise[i]})
      if (!(v >= 0.0)) throw ParameterError("power", "negative or NaN power at index " + std::to_string(i));
    const double den = isi[i] + ici[i] + noise[i];
    if (den > 0.0) {
      p.sinr[i] = signal[i] / den;
    } else if (signal[i] > 0.0) {
      p.sinr[i] = std::numeric_limits<double>::infinity();
    } else {
      p.sinr[i] = 0.0;
      p.undefined[i] = true;
    }
  }
  return p;
}

double elt_received_power(const ModulatedBank& bank, const ChannelRealization& ch, const ToneMask& mask,
                          double symbol_variance) {
  return symbol_variance * cascade_filters(bank, ch, mask).squaredNorm() / bank.num_subbands();
}

double elt_inband_noise(std::span<const double> noise_taps, const ToneMask& mask, int num_subbands) {
  const auto R = autocorrelation(noise_taps);
  const double pi = std::numbers::pi;
  double acc = 0.0;
  for (int k : mask.active) acc += band_power_from_autocorrelation(R, k * pi / num_subbands, (k + 1) * pi / num_subbands);
  return acc;
}

void write_kernel_csv(std::ostream& os, const KernelTable& q) {
  os << "k0,k,offset,qc,qs\n" << std::setprecision(17);
  for (std::size_t i = 0; i < q.subcarriers.size(); ++i)
    for (std::size_t j = 0; j < q.subcarriers.size(); ++j)
      for (int d = q.min_offset; d <= q.max_offset; ++d)
        os << q.subcarriers[i] << ',' << q.subcarriers[j] << ',' << d << ',' << q.cos(i, j, d) << ','
           << q.sin(i, j, d) << '\n';
}

void write_sinr_csv(std::ostream& os, const SinrProfile& p) {
  os << "k,p_signal,p_isi,p_ici,p_noise,sinr,sinr_db,undefined\n" << std::setprecision(17);
  for (std::size_t i = 0; i < p.sinr.size(); ++i) {
    const int k = i < p.subcarriers.size() ? p.subcarriers[i] : static_cast<int>(i);
    os << k << ',' << p.signal[i] << ',' << p.isi[i] << ',' << p.ici[i] << ',' << p.noise[i] << ',' << p.sinr[i]
       << ',' << 10.0 * std::log10(p.sinr[i]) << ',' << (p.undefined[i] ? 1 : 0) << '\n';
  }
}

void write_taps_csv(std::ostream& os, const EqualizerTaps& taps) {
  os << "k,mu,c,s\n" << std::setprecision(17);
  for (std::size_t i = 0; i < taps.subcarriers.size(); ++i)
    for (int mu = -taps.order; mu <= taps.order; ++mu)
      os << taps.subcarriers[i] << ',' << mu << ',' << taps.c_at(i, mu) << ',' << taps.s_at(i, mu) << '\n';
}

EqualizerTaps read_taps_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("k,mu,c,s", 0) != 0) throw IoError("tap file must start with 'k,mu,c,s'");
  std::map<int, std::map<int, std::pair<double, double>>> rows;
  int order = 0;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    int k = 0, mu = 0;
    double c = 0.0, s = 0.0;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ls >> k >> c1 >> mu >> c2 >> c >> c3 >> s) || c1 != ',' || c2 != ',' || c3 != ',')
      throw IoError("malformed tap line: '" + line + "'");
    if (!std::isfinite(c) || !std::isfinite(s)) throw IoError("non-finite tap in line: '" + line + "'");
    rows[k][mu] = {c, s};
    order = std::max(order, std::abs(mu));
  }
  if (rows.empty()) throw IoError("tap file holds no taps");
  EqualizerTaps taps;
  taps.order = order;
  taps.c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), 2 * order + 1);
  taps.s = taps.c;
  taps.clamped.assign(rows.size(), false);
  Eigen::Index r = 0;
  for (const auto& [k, by_mu] : rows) {
    taps.subcarriers.push_back(k);
    for (const auto& [mu, cs] : by_mu) {
      taps.c(r, mu + order) = cs.first;
      taps.s(r, mu + order) = cs.second;
    }
    ++r;
  }
  return taps;
}

}  // namespace eltmcm
