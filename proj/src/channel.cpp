#include "eltmcm/channel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "eltmcm/error.hpp"
#include "eltmcm/fft.hpp"
#include "eltmcm/random.hpp"

namespace eltmcm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kChannelFft = std::size_t{1} << 15;

void require_rate(double fs) {
  if (!(fs > 0.0) || !std::isfinite(fs)) throw ParameterError("sample_rate", "must be positive and finite");
}

void validate_table(std::span<const PsdPoint> table) {
  if (table.size() < 2) throw ParameterError("psd", "table needs at least two points");
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!std::isfinite(table[i].freq_hz) || !std::isfinite(table[i].dbm_per_hz))
      throw ParameterError("psd", "non-finite table entry");
    if (i > 0 && table[i].freq_hz <= table[i - 1].freq_hz)
      throw ParameterError("psd", "frequencies must be strictly increasing");
  }
}

void require_coverage(std::span<const PsdPoint> table, double fs) {
  if (table.front().freq_hz > 0.0 || table.back().freq_hz < fs / 2.0) {
    std::ostringstream msg;
    msg << "table spans [" << table.front().freq_hz << ", " << table.back().freq_hz
        << "] Hz but must cover the Nyquist band [0, " << fs / 2.0 << "] Hz";
    throw ParameterError("psd", msg.str());
  }
}

// Linear-in-dB interpolation of the table.
double psd_db_at(std::span<const PsdPoint> table, double f) {
  if (f <= table.front().freq_hz) return table.front().dbm_per_hz;
  if (f >= table.back().freq_hz) return table.back().dbm_per_hz;
  const auto it = std::upper_bound(table.begin(), table.end(), f,
                                   [](double v, const PsdPoint& p) { return v < p.freq_hz; });
  const PsdPoint& hi = *it;
  const PsdPoint& lo = *(it - 1);
  const double u = (f - lo.freq_hz) / (hi.freq_hz - lo.freq_hz);
  return lo.dbm_per_hz + u * (hi.dbm_per_hz - lo.dbm_per_hz);
}

// Target |B|^2 per radian-normalised frequency: one-sided density times fs/2.
double target_power(std::span<const PsdPoint> table, double f, double fs) {
  return std::pow(10.0, psd_db_at(table, f) / 10.0) * fs / 2.0;
}

}  // namespace

ChannelPreset class_preset(int cls) {
  ChannelPreset p;
  switch (cls) {
    case 1:
      p.a0 = 1e-3;
      p.a1 = 6e-10;
      return p;
    case 5:
      p.a0 = 1e-3;
      p.a1 = 2.5e-10;
      return p;
    case 9:
      p.a0 = 0.0;
      p.a1 = 0.4e-10;
      return p;
    default:
      throw ParameterError("class", "unsupported channel class " + std::to_string(cls) + " (expected 1, 5 or 9)");
  }
}

ChannelRealization ideal_channel(double sample_rate) {
  ChannelRealization ch;
  ch.taps = {1.0};
  ch.sample_rate = sample_rate;
  return ch;
}

ChannelRealization gen_channel(int cls, double sample_rate, std::uint64_t seed) {
  return gen_channel(class_preset(cls), sample_rate, seed, cls);
}

ChannelRealization gen_channel(const ChannelPreset& preset, double sample_rate, std::uint64_t seed,
                               std::optional<int> class_label) {
  require_rate(sample_rate);
  if (!(preset.path_density > 0.0) || !(preset.max_length_m > 0.0) || !(preset.velocity > 0.0))
    throw ParameterError("preset", "path density, maximum length and velocity must be positive");
  if (preset.a0 < 0.0 || preset.a1 < 0.0 || preset.prefix_s < 0.0 || preset.postfix_s < 0.0)
    throw ParameterError("preset", "attenuation coefficients and margins must be non-negative");

  auto rng = make_rng(seed, SeedLane::channel);
  std::poisson_distribution<int> count_dist(preset.path_density * preset.max_length_m);
  const int count = std::max(count_dist(rng), 1);
  std::uniform_real_distribution<double> length_dist(0.0, preset.max_length_m);
  std::uniform_real_distribution<double> gain_dist(-1.0, 1.0);
  std::vector<double> lengths(static_cast<std::size_t>(count));
  for (double& d : lengths) d = length_dist(rng);
  std::sort(lengths.begin(), lengths.end());
  std::vector<double> gains(lengths.size());
  for (double& g : gains) g = gain_dist(rng);

  // Frequency response on a dense grid, band-limited by a raised-cosine roll-off
  // over the top 10% below Nyquist.
  const std::size_t nfft = kChannelFft;
  const std::size_t nb = nfft / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  const double pass = 0.9 * nyquist;
  const double df = sample_rate / static_cast<double>(nfft);
  std::vector<fft::cplx> H(nb, fft::cplx{0.0, 0.0});
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const double d = lengths[i];
    const double delay = (d - lengths.front()) / preset.velocity + preset.prefix_s;
    // Phase rotation advances by a fixed step per bin; re-anchored periodically.
    const fft::cplx step = std::polar(1.0, -2.0 * kPi * df * delay);
    fft::cplx rot{1.0, 0.0};
    for (std::size_t b = 0; b < nb; ++b) {
      if (b % 1024 == 0) rot = std::polar(1.0, -2.0 * kPi * df * static_cast<double>(b) * delay);
      const double f = static_cast<double>(b) * df;
      const double att = preset.a0 + preset.a1 * (preset.exponent == 1.0 ? f : std::pow(f, preset.exponent));
      H[b] += gains[i] * std::exp(-att * d) * rot;
      rot *= step;
    }
  }
  for (std::size_t b = 0; b < nb; ++b) {
    const double f = static_cast<double>(b) * df;
    if (f >= pass) H[b] *= 0.5 * (1.0 + std::cos(kPi * (f - pass) / (nyquist - pass)));
  }
  std::vector<double> h = fft::irfft(H, nfft);

  const auto L = static_cast<std::size_t>(
      std::ceil((preset.prefix_s + preset.max_length_m / preset.velocity + preset.postfix_s) * sample_rate));
  if (L < 1 || L > nfft) throw ParameterError("preset", "impulse response window does not fit the design grid");
  h.resize(L);
  const auto tail = std::min(L, static_cast<std::size_t>(preset.postfix_s * sample_rate / 2.0));
  for (std::size_t i = 0; i < tail; ++i)
    h[L - tail + i] *= 0.5 * (1.0 + std::cos(kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(tail)));
  const double g = std::pow(10.0, preset.gain_db / 20.0);
  for (double& v : h) v *= g;

  ChannelRealization ch;
  ch.taps = std::move(h);
  ch.sample_rate = sample_rate;
  ch.class_label = class_label;
  ch.seed = seed;
  return ch;
}

double mean_band_gain(const ChannelRealization& ch, double f_lo, double f_hi) {
  require_rate(ch.sample_rate);
  if (!(f_lo < f_hi) || f_lo < 0.0 || f_hi > ch.sample_rate / 2.0)
    throw ParameterError("band", "need 0 <= f_lo < f_hi <= fs/2");
  const std::size_t nfft = fft::next_pow2(std::max<std::size_t>(ch.taps.size() * 8, 1 << 16));
  const auto H = fft::rfft(ch.taps, nfft);
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t b = 0; b < H.size(); ++b) {
    const double f = static_cast<double>(b) * ch.sample_rate / static_cast<double>(nfft);
    if (f < f_lo || f > f_hi) continue;
    acc += std::norm(H[b]);
    ++n;
  }
  if (n == 0) throw ParameterError("band", "band narrower than the evaluation grid");
  return acc / static_cast<double>(n);
}

NoiseModel NoiseModel::awgn(double variance) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) throw ParameterError("variance", "must be finite and >= 0");
  NoiseModel m;
  m.kind = NoiseKind::awgn;
  m.variance = variance;
  return m;
}

NoiseModel NoiseModel::from_psd(std::vector<PsdPoint> table, int shaping_len) {
  validate_table(table);
  NoiseModel m;
  m.kind = NoiseKind::psd;
  m.psd = std::move(table);
  m.shaping_len = shaping_len;
  return m;
}

std::vector<PsdPoint> default_bgn_psd() {
  std::vector<PsdPoint> t;
  for (int i = 0; i <= 200; ++i) {
    const double f = 0.25e6 * i;
    t.push_back({f, -145.0 + 50.0 * std::exp(-f / 6e6)});
  }
  return t;
}

ShapingFilter psd_to_shaping(std::span<const PsdPoint> table, double sample_rate, int num_taps) {
  require_rate(sample_rate);
  validate_table(table);
  require_coverage(table, sample_rate);
  if (num_taps < 1 || num_taps % 2 == 0) throw ParameterError("num_taps", "must be a positive odd number");

  const std::size_t nfft = std::max<std::size_t>(8192, fft::next_pow2(8 * static_cast<std::size_t>(num_taps)));
  std::vector<fft::cplx> A(nfft / 2 + 1);
  for (std::size_t b = 0; b < A.size(); ++b) {
    const double f = static_cast<double>(b) * sample_rate / static_cast<double>(nfft);
    A[b] = std::sqrt(target_power(table, f, sample_rate));
  }
  const auto zero_phase = fft::irfft(A, nfft);
  const int half = num_taps / 2;
  ShapingFilter out;
  out.taps.resize(static_cast<std::size_t>(num_taps));
  for (int i = 0; i < num_taps; ++i) {
    const long idx = ((i - half) % static_cast<long>(nfft) + static_cast<long>(nfft)) % static_cast<long>(nfft);
    const double w = 0.5 * (1.0 - std::cos(2.0 * kPi * (i + 1) / (num_taps + 1.0)));
    out.taps[i] = zero_phase[static_cast<std::size_t>(idx)] * w;
  }

  const std::size_t ncheck = std::size_t{1} << 16;
  const auto B = fft::rfft(out.taps, ncheck);
  double worst = 0.0;
  for (std::size_t b = 0; b < B.size(); ++b) {
    const double f = static_cast<double>(b) * sample_rate / static_cast<double>(ncheck);
    const double dev = 10.0 * std::log10(std::max(std::norm(B[b]), 1e-300) / target_power(table, f, sample_rate));
    worst = std::max(worst, std::abs(dev));
  }
  out.max_deviation_db = worst;
  if (worst > 1.0) {
    std::ostringstream msg;
    msg << num_taps << " taps reach only " << std::setprecision(4) << worst
        << " dB maximum in-band deviation (limit 1 dB)";
    throw ParameterError("num_taps", msg.str());
  }
  return out;
}

std::vector<double> noise_filter(const NoiseModel& model, double sample_rate) {
  if (model.kind == NoiseKind::awgn) {
    if (!(model.variance >= 0.0)) throw ParameterError("variance", "must be >= 0");
    return {std::sqrt(model.variance)};
  }
  if (!(model.scale >= 0.0)) throw ParameterError("scale", "must be >= 0");
  auto b = psd_to_shaping(model.psd, sample_rate, model.shaping_len).taps;
  const double g = std::sqrt(model.scale);
  for (double& v : b) v *= g;
  return b;
}

std::vector<double> autocorrelation(std::span<const double> b) {
  if (b.empty()) return {};
  const std::vector<double> rev(b.rbegin(), b.rend());
  const auto full = fft::convolve(b, rev);
  return std::vector<double>(full.begin() + static_cast<long>(b.size()) - 1, full.end());
}

double band_noise_power(std::span<const double> b, double w1, double w2) {
  return band_power_from_autocorrelation(autocorrelation(b), w1, w2);
}

double band_power_from_autocorrelation(std::span<const double> R, double w1, double w2) {
  if (R.empty()) return 0.0;
  double acc = R[0] * (w2 - w1);
  for (std::size_t l = 1; l < R.size(); ++l) {
    const double dl = static_cast<double>(l);
    acc += 2.0 * R[l] * (std::sin(dl * w2) - std::sin(dl * w1)) / dl;
  }
  return acc / kPi;
}

std::vector<double> gen_noise(const NoiseModel& model, std::size_t length, double sample_rate, std::uint64_t seed) {
  require_rate(sample_rate);
  if (model.kind == NoiseKind::psd) {
    validate_table(model.psd);
    require_coverage(model.psd, sample_rate);
  }
  const auto b = noise_filter(model, sample_rate);
  auto rng = make_rng(seed, SeedLane::noise);
  std::normal_distribution<double> normal(0.0, 1.0);
  if (b.size() == 1) {
    std::vector<double> out(length);
    for (double& v : out) v = b[0] * normal(rng);
    return out;
  }
  std::vector<double> white(length + b.size() - 1);
  for (double& v : white) v = normal(rng);
  const auto full = fft::convolve(white, b);
  // Keep only outputs whose filter memory is fully populated.
  return std::vector<double>(full.begin() + static_cast<long>(b.size()) - 1,
                             full.begin() + static_cast<long>(b.size() - 1 + length));
}

std::vector<double> apply_channel(std::span<const double> x, double x_rate, const ChannelRealization& ch,
                                  const NoiseModel& noise, int beta, std::uint64_t seed) {
  require_rate(x_rate);
  require_rate(ch.sample_rate);
  if (std::abs(x_rate - ch.sample_rate) > 1e-9 * ch.sample_rate) {
    std::ostringstream msg;
    msg << "signal at " << x_rate << " Hz but channel at " << ch.sample_rate << " Hz";
    throw ParameterError("sample_rate", msg.str());
  }
  if (beta < 0) throw ParameterError("beta", "must be non-negative");
  if (ch.taps.empty()) throw DimensionError("channel has no taps");
  std::vector<double> out(static_cast<std::size_t>(beta), 0.0);
  if (!x.empty()) {
    const auto y = fft::convolve(x, ch.taps);
    out.insert(out.end(), y.begin(), y.end());
  }
  const bool silent = noise.kind == NoiseKind::awgn && noise.variance == 0.0;
  if (!silent && !out.empty()) {
    const auto r = gen_noise(noise, out.size() - static_cast<std::size_t>(beta), ch.sample_rate, seed);
    for (std::size_t i = 0; i < r.size(); ++i) out[static_cast<std::size_t>(beta) + i] += r[i];
  }
  return out;
}

void write_channel(std::ostream& os, const ChannelRealization& ch) {
  os << std::setprecision(17) << ch.sample_rate << ' ' << ch.taps.size() << '\n';
  for (double a : ch.taps) os << a << '\n';
}

ChannelRealization read_channel(std::istream& is) {
  ChannelRealization ch;
  std::size_t L = 0;
  if (!(is >> ch.sample_rate >> L)) throw IoError("channel header must be 'sample_rate_hz L'");
  if (!(ch.sample_rate > 0.0)) throw IoError("channel sample rate must be positive");
  if (L < 1) throw IoError("channel must have at least one tap");
  ch.taps.resize(L);
  for (std::size_t i = 0; i < L; ++i) {
    if (!(is >> ch.taps[i])) throw IoError("channel file ends after " + std::to_string(i) + " of " +
                                           std::to_string(L) + " taps");
    if (!std::isfinite(ch.taps[i])) throw IoError("channel tap " + std::to_string(i) + " is not finite");
  }
  return ch;
}

void write_psd(std::ostream& os, std::span<const PsdPoint> table) {
  os << std::setprecision(17);
  for (const auto& p : table) os << p.freq_hz << ' ' << p.dbm_per_hz << '\n';
}

std::vector<PsdPoint> read_psd(std::istream& is) {
  std::vector<PsdPoint> table;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    PsdPoint p;
    if (!(ls >> p.freq_hz >> p.dbm_per_hz)) throw IoError("malformed PSD line: '" + line + "'");
    table.push_back(p);
  }
  try {
    validate_table(table);
  } catch (const ParameterError& e) {
    throw IoError(std::string("invalid PSD file: ") + e.what());
  }
  return table;
}

}  // namespace eltmcm
