#include "eltmcm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"

#include "eltmcm/error.hpp"
#include "eltmcm/montecarlo.hpp"
#include "eltmcm/prototype.hpp"
#include "eltmcm/random.hpp"
#include "eltmcm/rate.hpp"
#include "eltmcm/sinr.hpp"

namespace eltmcm {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<double> shaping_taps(const ExperimentSpec& spec, double fs) {
  if (spec.noise == NoiseKind::awgn) return {1.0};
  const auto& table = spec.psd.empty() ? default_bgn_psd() : spec.psd;
  return psd_to_shaping(table, fs, spec.shaping_len).taps;
}

double noise_scale(double received_power, double snr_db, double inband_noise) {
  if (!(inband_noise > 0.0)) throw Error("in-band noise power is zero");
  return received_power / (std::pow(10.0, snr_db / 10.0) * inband_noise);
}

struct RealizationOutput {
  std::vector<SweepCell> cells;
};

// Shared, read-only per-sweep state.
struct SweepContext {
  const ExperimentSpec& spec;
  std::optional<ModulatedBank> bank;
  ToneMask elt_mask;
  std::vector<double> elt_noise;
  double elt_inband = 0.0;
  WofdmConfig wcfg;
  std::vector<double> w_noise;
  double w_inband = 0.0;
};

void fail_cells(std::vector<SweepCell>& cells, const std::string& system, const std::vector<int>& orders,
                const ExperimentSpec& spec, int r, const std::string& message) {
  for (int order : orders)
    for (double snr : spec.snr_db)
      cells.push_back({system, order, snr, r, std::numeric_limits<double>::quiet_NaN(), false, message});
}

ChannelRealization realization_channel(const ExperimentSpec& spec, double fs, std::uint64_t seed) {
  if (spec.channel_class == 0) return ideal_channel(fs);
  return gen_channel(spec.channel_class, fs, seed);
}

void run_elt(const SweepContext& ctx, int r, std::uint64_t seed, std::vector<SweepCell>& cells) {
  const auto& spec = ctx.spec;
  std::string stage = "channel";
  try {
    const auto& bank = *ctx.bank;
    const auto ch = realization_channel(spec, spec.elt.sample_rate, seed);
    stage = "alignment";
    const auto align = choose_alignment(bank, ch, ctx.elt_mask);
    stage = "kernel";
    const auto q = kernel_q(bank, ch, align, ctx.elt_mask);
    const double prx = elt_received_power(bank, ch, ctx.elt_mask, spec.symbol_variance);
    const double gap = gap_pam(spec.ser);
    std::vector<SweepCell> local;
    for (int order : spec.orders) {
      stage = "equalizer design (order " + std::to_string(order) + ")";
      const auto taps = design_ascet(bank, ch, align, ctx.elt_mask, order);
      stage = "power analysis (order " + std::to_string(order) + ")";
      const auto p = interference_powers(q, taps, spec.symbol_variance);
      const auto pn = power_noise(bank, taps, ctx.elt_noise);
      for (double snr : spec.snr_db) {
        stage = "rate (order " + std::to_string(order) + ")";
        const double s = noise_scale(prx, snr, ctx.elt_inband);
        std::vector<double> noise(pn.size());
        for (std::size_t i = 0; i < pn.size(); ++i) noise[i] = s * pn[i];
        const auto prof = sinr(p.signal, p.isi, p.ici, noise);
        const auto cap = capacity(prof.sinr, gap);
        local.push_back({"elt_mcm", order, snr, r, throughput(cap, spec.elt.spacing(), spec.elt.num_subbands, 0), true, {}});
      }
    }
    cells.insert(cells.end(), local.begin(), local.end());
  } catch (const std::exception& e) {
    fail_cells(cells, "elt_mcm", spec.orders, spec, r, stage + ": " + e.what());
  }
}

void run_wofdm(const SweepContext& ctx, int r, std::uint64_t seed, std::vector<SweepCell>& cells) {
  const auto& spec = ctx.spec;
  std::string stage = "channel";
  try {
    const auto ch = realization_channel(spec, spec.wofdm.sample_rate, seed);
    stage = "windowed-OFDM kernel";
    const auto prof = wofdm_sinr(ctx.wcfg, ch, ctx.w_noise, spec.symbol_variance);
    const double gap = gap_qam(spec.ser);
    std::vector<SweepCell> local;
    for (double snr : spec.snr_db) {
      stage = "rate";
      const double s = noise_scale(prof.received_power, snr, ctx.w_inband);
      std::vector<double> sv(prof.sinr.size());
      for (std::size_t i = 0; i < sv.size(); ++i) {
        if (prof.unusable[i]) continue;
        const double den = s * prof.noise[i] + prof.interference[i];
        const double num = spec.symbol_variance * prof.signal_gain[i];
        sv[i] = den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      }
      const auto cap = capacity(sv, gap);
      local.push_back({"wofdm", 0, snr, r,
                       throughput(cap, spec.wofdm.spacing(), spec.wofdm.fft_size, spec.wofdm.guard), true, {}});
    }
    cells.insert(cells.end(), local.begin(), local.end());
  } catch (const std::exception& e) {
    fail_cells(cells, "wofdm", {0}, spec, r, stage + ": " + e.what());
  }
}

}  // namespace

std::vector<Band> default_notches() {
  return {{1.8e6, 2.0e6},     {3.5e6, 4.0e6},    {7.0e6, 7.3e6},   {10.1e6, 10.15e6}, {14.0e6, 14.35e6},
          {18.068e6, 18.168e6}, {21.0e6, 21.45e6}, {24.89e6, 24.99e6}, {28.0e6, 29.7e6}};
}

ToneMask build_tone_mask(int num_bins, double bin_width, bool centred, Band band, const std::vector<Band>& notches,
                         int count, int first_allowed, int last_allowed) {
  if (num_bins <= 0) throw ParameterError("num_bins", "must be positive");
  if (!(bin_width > 0.0)) throw ParameterError("bin_width", "must be positive");
  if (last_allowed < 0) last_allowed = num_bins - 1;
  std::vector<int> ks;
  for (int k = std::max(first_allowed, 0); k <= std::min(last_allowed, num_bins - 1); ++k) {
    const double lo = centred ? (k - 0.5) * bin_width : k * bin_width;
    const double hi = centred ? (k + 0.5) * bin_width : (k + 1) * bin_width;
    if (lo < band.first || hi > band.second) continue;
    const bool notched =
        std::any_of(notches.begin(), notches.end(), [&](const Band& n) { return lo < n.second && hi > n.first; });
    if (!notched) ks.push_back(k);
  }
  if (count > 0) {
    if (static_cast<int>(ks.size()) < count)
      throw ParameterError("num_active", "only " + std::to_string(ks.size()) + " bins qualify, " +
                                             std::to_string(count) + " requested");
    ks.resize(static_cast<std::size_t>(count));
  }
  if (ks.empty()) throw ParameterError("num_active", "tone mask is empty");
  return ToneMask::from_indices(std::move(ks), num_bins);
}

ToneMask EltSystem::tone_mask(const std::vector<Band>& notches) const {
  if (!mask.empty()) return ToneMask::from_indices(mask, num_subbands);
  return build_tone_mask(num_subbands, spacing(), false, band, notches, num_active);
}

WofdmConfig WofdmSystem::config(const std::vector<Band>& notches) const {
  WofdmConfig cfg;
  cfg.fft_size = fft_size;
  cfg.guard = guard;
  cfg.rolloff = rolloff;
  cfg.spacing = spacing();
  cfg.active = mask.empty() ? build_tone_mask(fft_size, spacing(), true, band, notches, num_active, 1, fft_size / 2 - 1)
                            : ToneMask::from_indices(mask, fft_size);
  validate(cfg);
  return cfg;
}

void ExperimentSpec::validate() const {
  if (realizations < 1) throw ParameterError("realizations", "must be >= 1");
  if (snr_db.empty()) throw ParameterError("snr_db", "list must not be empty");
  if (orders.empty()) throw ParameterError("orders", "list must not be empty");
  for (int o : orders)
    if (o < 0) throw ParameterError("orders", "equalizer orders must be >= 0");
  if (channel_class != 0 && channel_class != 1 && channel_class != 5 && channel_class != 9)
    throw ParameterError("class", "must be 0 (ideal), 1, 5 or 9");
  if (!(ser > 0.0 && ser < 1.0)) throw ParameterError("ser", "must lie in (0, 1)");
  if (!(symbol_variance > 0.0)) throw ParameterError("symbol_variance", "must be positive");
  if (threads < 1) throw ParameterError("threads", "must be >= 1");
  for (double s : snr_db)
    if (!std::isfinite(s)) throw ParameterError("snr_db", "values must be finite");
}

std::string canonical_text(const ExperimentSpec& spec) {
  std::ostringstream os;
  const char* phy = spec.phy == Phy::elt_mcm ? "elt_mcm" : spec.phy == Phy::wofdm ? "wofdm" : "both";
  os << "phy=" << phy << '\n' << "orders=" << join_ints(spec.orders) << '\n';
  os << "class=" << spec.channel_class << '\n' << "realizations=" << spec.realizations << '\n';
  os << "snr_db=";
  for (std::size_t i = 0; i < spec.snr_db.size(); ++i) os << (i ? "," : "") << fmt(spec.snr_db[i]);
  os << '\n' << "noise=" << (spec.noise == NoiseKind::awgn ? "awgn" : "bgn") << '\n';
  os << "psd=";
  for (const auto& p : spec.psd) os << fmt(p.freq_hz) << ':' << fmt(p.dbm_per_hz) << ';';
  os << '\n' << "shaping_len=" << spec.shaping_len << '\n';
  os << "elt=" << spec.elt.num_subbands << ',' << spec.elt.overlap << ',' << fmt(spec.elt.sample_rate) << ','
     << fmt(spec.elt.band.first) << ',' << fmt(spec.elt.band.second) << ',' << spec.elt.num_active << ','
     << join_ints(spec.elt.mask) << '\n';
  os << "wofdm=" << spec.wofdm.fft_size << ',' << spec.wofdm.guard << ',' << spec.wofdm.rolloff << ','
     << fmt(spec.wofdm.sample_rate) << ',' << fmt(spec.wofdm.band.first) << ',' << fmt(spec.wofdm.band.second) << ','
     << spec.wofdm.num_active << ',' << join_ints(spec.wofdm.mask) << '\n';
  os << "notches=";
  for (const auto& n : spec.notches) os << fmt(n.first) << '-' << fmt(n.second) << ';';
  os << '\n' << "seed=" << spec.seed << '\n' << "ser=" << fmt(spec.ser) << '\n';
  os << "symbol_variance=" << fmt(spec.symbol_variance) << '\n';
  return os.str();
}

std::string spec_hash(const ExperimentSpec& spec) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical_text(spec)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SweepResult run_sweep(const ExperimentSpec& spec) {
  spec.validate();
  SweepContext ctx{spec, std::nullopt, {}, {}, 0.0, {}, {}, 0.0};
  const bool do_elt = spec.phy != Phy::wofdm;
  const bool do_wofdm = spec.phy != Phy::elt_mcm;
  if (do_elt) {
    ctx.bank = build_bank(make_prototype(spec.elt.num_subbands, spec.elt.overlap));
    ctx.elt_mask = spec.elt.tone_mask(spec.notches);
    ctx.elt_noise = shaping_taps(spec, spec.elt.sample_rate);
    ctx.elt_inband = elt_inband_noise(ctx.elt_noise, ctx.elt_mask, spec.elt.num_subbands);
  }
  if (do_wofdm) {
    ctx.wcfg = spec.wofdm.config(spec.notches);
    ctx.w_noise = shaping_taps(spec, spec.wofdm.sample_rate);
    ctx.w_inband = wofdm_inband_noise(ctx.w_noise, ctx.wcfg);
  }

  SweepResult result;
  result.spec_hash = spec_hash(spec);
  result.seed = spec.seed;
  std::vector<RealizationOutput> outputs(static_cast<std::size_t>(spec.realizations));
  for (int r = 0; r < spec.realizations; ++r) result.realization_seeds.push_back(spec.seed + static_cast<std::uint64_t>(r));

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int r = next++; r < spec.realizations; r = next++) {
      auto& out = outputs[static_cast<std::size_t>(r)];
      const auto seed = result.realization_seeds[static_cast<std::size_t>(r)];
      if (do_elt) run_elt(ctx, r, seed, out.cells);
      if (do_wofdm) run_wofdm(ctx, r, seed, out.cells);
    }
  };
  const int nthreads = std::min(spec.threads, spec.realizations);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& o : outputs) result.cells.insert(result.cells.end(), o.cells.begin(), o.cells.end());
  std::stable_sort(result.cells.begin(), result.cells.end(), [](const SweepCell& a, const SweepCell& b) {
    return std::tie(a.system, a.equalizer_order, a.snr_db, a.realization) <
           std::tie(b.system, b.equalizer_order, b.snr_db, b.realization);
  });
  result.summary = summarize(result.cells);
  return result;
}

std::vector<SweepSummary> summarize(const std::vector<SweepCell>& cells) {
  std::map<std::tuple<std::string, int, double>, std::vector<const SweepCell*>> groups;
  for (const auto& c : cells) groups[{c.system, c.equalizer_order, c.snr_db}].push_back(&c);
  std::vector<SweepSummary> out;
  for (const auto& [key, members] : groups) {
    SweepSummary s;
    std::tie(s.system, s.equalizer_order, s.snr_db) = key;
    double sum = 0.0;
    for (const auto* c : members) {
      if (!c->ok) {
        ++s.failed;
        continue;
      }
      sum += c->throughput_bps;
      ++s.n;
    }
    s.mean_bps = s.n > 0 ? sum / s.n : std::numeric_limits<double>::quiet_NaN();
    double ss = 0.0;
    for (const auto* c : members)
      if (c->ok) ss += (c->throughput_bps - s.mean_bps) * (c->throughput_bps - s.mean_bps);
    s.std_bps = s.n > 1 ? std::sqrt(ss / (s.n - 1)) : 0.0;
    out.push_back(s);
  }
  return out;
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "system,equalizer_order,snr_db,realization,throughput_bps\n";
  for (const auto& c : r.cells)
    os << c.system << ',' << c.equalizer_order << ',' << fmt(c.snr_db) << ',' << c.realization << ','
       << (c.ok ? fmt(c.throughput_bps) : std::string("nan")) << '\n';
}

void write_summary_csv(std::ostream& os, const SweepResult& r) {
  os << "system,equalizer_order,snr_db,mean_throughput_bps,std_bps,n\n";
  for (const auto& s : r.summary)
    os << s.system << ',' << s.equalizer_order << ',' << fmt(s.snr_db) << ',' << fmt(s.mean_bps) << ','
       << fmt(s.std_bps) << ',' << s.n << '\n';
}

void write_sweep_metadata(std::ostream& os, const SweepResult& r, const ExperimentSpec& spec) {
  nlohmann::json j;
  j["version"] = r.version;
  j["spec_hash"] = r.spec_hash;
  j["seed"] = r.seed;
  j["realization_seeds"] = r.realization_seeds;
  j["spec"] = canonical_text(spec);
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& c : r.cells)
    if (!c.ok)
      failures.push_back({{"system", c.system}, {"equalizer_order", c.equalizer_order}, {"snr_db", c.snr_db},
                          {"realization", c.realization}, {"error", c.error}});
  j["failures"] = failures;
  os << j.dump(2) << '\n';
}

std::vector<SweepCell> read_sweep_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "system,equalizer_order,snr_db,realization,throughput_bps")
    throw IoError("sweep CSV header mismatch");
  std::vector<SweepCell> cells;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string item;
    while (std::getline(ls, item, ',')) f.push_back(item);
    if (f.size() != 5) throw IoError("sweep CSV row needs 5 fields: '" + line + "'");
    SweepCell c;
    try {
      c.system = f[0];
      c.equalizer_order = std::stoi(f[1]);
      c.snr_db = std::stod(f[2]);
      c.realization = std::stoi(f[3]);
      if (f[4] == "nan") {
        c.ok = false;
        c.throughput_bps = std::numeric_limits<double>::quiet_NaN();
      } else {
        c.throughput_bps = std::stod(f[4]);
      }
    } catch (const std::exception&) {
      throw IoError("malformed sweep CSV row: '" + line + "'");
    }
    cells.push_back(std::move(c));
  }
  return cells;
}

ChannelRealization toy_channel(int length, std::uint64_t seed, double sample_rate) {
  if (length < 1) throw ParameterError("channel_length", "must be >= 1");
  auto rng = make_rng(seed, SeedLane::channel, 99);
  std::normal_distribution<double> normal(0.0, 1.0);
  ChannelRealization ch;
  ch.sample_rate = sample_rate;
  ch.seed = seed;
  ch.taps.resize(static_cast<std::size_t>(length));
  ch.taps[0] = 1.0;
  for (int l = 1; l < length; ++l) ch.taps[static_cast<std::size_t>(l)] = 0.6 * std::exp(-0.35 * l) * normal(rng);
  return ch;
}

bool ValidationReport::passed() const {
  return !entries.empty() && std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
}

ValidationReport run_validation(const ValidationOptions& opt) {
  const bool ideal = opt.ideal_channel;
  const auto bank = build_bank(make_prototype(opt.num_subbands, opt.overlap));
  const auto mask = ToneMask::all(opt.num_subbands);
  const auto ch = ideal ? ideal_channel(1.0) : toy_channel(opt.channel_length, opt.seed);
  const auto align = choose_alignment(bank, ch, mask);
  const auto q = kernel_q(bank, ch, align, mask);
  const double noise_var = ideal ? 0.0 : opt.noise_variance;
  const std::vector<double> b{std::sqrt(noise_var)};
  const double power_tol = ideal ? 1e-10 : 0.02;
  const double sinr_tol = ideal ? 1e-10 : 0.1;

  ValidationReport rep;
  auto add = [&](std::string name, double dev, double tol) { rep.entries.push_back({std::move(name), dev, tol, dev < tol}); };

  {
    const auto measured = measure_kernel(bank, ch, align, mask);
    double worst = 0.0, scale = 0.0;
    for (int d = q.min_offset; d <= q.max_offset; ++d) {
      worst = std::max({worst, (q.cos_at(d) - measured.cos_at(d)).cwiseAbs().maxCoeff(),
                        (q.sin_at(d) - measured.sin_at(d)).cwiseAbs().maxCoeff()});
      scale = std::max({scale, q.cos_at(d).cwiseAbs().maxCoeff(), q.sin_at(d).cwiseAbs().maxCoeff()});
    }
    add("kernel", worst / scale, 1e-12);
  }

  // Relative deviation with a floor so that numerically-zero powers compare as equal.
  auto rel = [](double analytic, double mc, double floor) {
    return std::abs(analytic - mc) / std::max(std::abs(mc), floor);
  };
  // SINR deviation in dB; when both sides are distortion-free to 1e-10 the dB
  // scale is meaningless and the distortion-to-signal ratios are compared instead.
  auto db_dev = [](double a, double m) {
    const double ia = 1.0 / a, im = 1.0 / m;
    if (ia < 1e-10 && im < 1e-10) return std::abs(ia - im);
    return std::abs(10.0 * std::log10(a) - 10.0 * std::log10(m));
  };

  MonteCarloOptions mco;
  mco.num_symbols = opt.num_symbols;
  mco.num_noise_symbols = opt.num_noise_symbols;
  mco.seed = opt.seed;
  for (int order : opt.orders) {
    const auto taps = design_ascet(bank, ch, align, mask, order);
    const auto p = interference_powers(q, taps, 1.0);
    auto noise_taps = taps;
    if (opt.corrupt_noise_taps) {
      noise_taps.c *= 1.1;
      noise_taps.s *= 0.9;
    }
    const auto pn = power_noise(bank, noise_taps, b);
    const auto prof = sinr(p.signal, p.isi, p.ici, pn);
    const auto mc = simulate_elt_powers(bank, ch, align, mask, taps, noise_var > 0.0 ? std::span<const double>(b)
                                                                                     : std::span<const double>{},
                                        mco);
    double ds = 0, di = 0, dc = 0, dn = 0, dsinr = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      const double floor = 1e-9 * p.signal[i];
      ds = std::max(ds, rel(p.signal[i], mc.own_gain[i] * mc.own_gain[i], floor));
      di = std::max(di, rel(p.isi[i], mc.isi[i], floor));
      dc = std::max(dc, rel(p.ici[i], mc.ici[i], floor));
      dn = std::max(dn, rel(pn[i], mc.noise[i], floor));
      dsinr = std::max(dsinr, db_dev(prof.sinr[i], mc.sinr[i]));
    }
    const std::string tag = " (order " + std::to_string(order) + ")";
    add("signal" + tag, ds, power_tol);
    add("isi" + tag, di, power_tol);
    add("ici" + tag, dc, power_tol);
    add("noise" + tag, dn, power_tol);
    add("sinr_db" + tag, dsinr, sinr_tol);
  }

  if (opt.include_wofdm && !ideal) {
    WofdmConfig cfg;
    cfg.fft_size = 16;
    cfg.guard = 2;
    cfg.spacing = 1.0 / 16.0;
    cfg.active = ToneMask::from_indices({1, 2, 3, 4, 5, 6, 7}, 16);
    const auto wch = toy_channel(6, opt.seed + 1);
    const auto prof = wofdm_sinr(cfg, wch, std::vector<double>{}, 1.0);
    const auto mc = simulate_wofdm_interference(cfg, wch, mco);
    double dev = 0.0;
    for (std::size_t i = 0; i < mc.size(); ++i) dev = std::max(dev, rel(prof.interference[i], mc[i], 1e-12));
    add("wofdm_interference", dev, 0.02);
  }
  return rep;
}

void write_validation_report(std::ostream& os, const ValidationReport& report) {
  for (const auto& e : report.entries)
    os << (e.pass ? "PASS " : "FAIL ") << std::left << std::setw(24) << e.quantity << " deviation "
       << std::scientific << std::setprecision(3) << e.deviation << " tolerance " << e.tolerance << std::defaultfloat
       << '\n';
  os << (report.passed() ? "validation passed" : "validation FAILED") << '\n';
}

}  // namespace eltmcm
