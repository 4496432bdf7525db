#include "eltmcm/config.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "eltmcm/channel.hpp"

namespace eltmcm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

[[noreturn]] void bad(const ConfigEntry& e, const std::string& why) {
  std::string where = e.line > 0 ? "line " + std::to_string(e.line) + ": " : "override: ";
  throw ConfigError(where + e.key + ": " + why);
}

double to_double(const ConfigEntry& e, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) bad(e, "trailing characters in number '" + text + "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad(e, "expected a number, got '" + text + "'");
  }
}

long long to_integer(const ConfigEntry& e, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) bad(e, "trailing characters in integer '" + text + "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad(e, "expected an integer, got '" + text + "'");
  }
}

int to_int(const ConfigEntry& e) { return static_cast<int>(to_integer(e, e.value)); }

std::vector<int> to_int_list(const ConfigEntry& e) {
  std::vector<int> out;
  if (e.value.empty()) return out;
  for (const auto& item : split(e.value, ',')) out.push_back(static_cast<int>(to_integer(e, item)));
  return out;
}

Band to_band(const ConfigEntry& e) {
  const auto parts = split(e.value, ',');
  if (parts.size() != 2) bad(e, "expected 'lo_hz,hi_hz'");
  return {to_double(e, parts[0]), to_double(e, parts[1])};
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  const ConfigEntry e{"list", text, 0};
  std::vector<double> out;
  const auto t = trim(text);
  if (t.empty()) return out;
  if (t.find(':') != std::string::npos) {
    const auto p = split(t, ':');
    if (p.size() != 3) bad(e, "range must be 'start:step:stop'");
    const double a = to_double(e, p[0]), step = to_double(e, p[1]), b = to_double(e, p[2]);
    if (!(step > 0.0) || b < a) bad(e, "range needs step > 0 and stop >= start");
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
  }
  for (const auto& item : split(t, ',')) out.push_back(to_double(e, item));
  return out;
}

std::vector<ConfigEntry> parse_config(std::istream& is) {
  std::vector<ConfigEntry> out;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const auto text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected 'key = value', got '" + text + "'");
    ConfigEntry e{trim(text.substr(0, eq)), trim(text.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key");
    for (const auto& prev : out)
      if (prev.key == e.key)
        throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + e.key + "' (first on line " +
                          std::to_string(prev.line) + ")");
    out.push_back(std::move(e));
  }
  return out;
}

void apply_setting(ExperimentSpec& spec, const ConfigEntry& e) {
  const auto& k = e.key;
  const auto& v = e.value;
  if (k == "phy") {
    if (v == "elt_mcm") spec.phy = Phy::elt_mcm;
    else if (v == "wofdm") spec.phy = Phy::wofdm;
    else if (v == "both") spec.phy = Phy::both;
    else bad(e, "expected elt_mcm, wofdm or both");
  } else if (k == "orders") {
    spec.orders = to_int_list(e);
  } else if (k == "class") {
    spec.channel_class = to_int(e);
  } else if (k == "realizations") {
    spec.realizations = to_int(e);
  } else if (k == "snr_db") {
    try {
      spec.snr_db = parse_number_list(v);
    } catch (const ConfigError& err) {
      bad(e, err.what());
    }
  } else if (k == "noise") {
    if (v == "awgn") spec.noise = NoiseKind::awgn;
    else if (v == "bgn") spec.noise = NoiseKind::psd;
    else bad(e, "expected awgn or bgn");
  } else if (k == "psd_file") {
    std::ifstream f(v);
    if (!f) throw IoError("cannot open PSD file '" + v + "'");
    spec.psd = read_psd(f);
  } else if (k == "shaping_len") {
    spec.shaping_len = to_int(e);
  } else if (k == "seed") {
    spec.seed = static_cast<std::uint64_t>(to_integer(e, v));
  } else if (k == "ser") {
    spec.ser = to_double(e, v);
  } else if (k == "symbol_variance") {
    spec.symbol_variance = to_double(e, v);
  } else if (k == "threads") {
    spec.threads = to_int(e);
  } else if (k == "notches") {
    spec.notches.clear();
    if (v == "none") return;
    for (const auto& item : split(v, ',')) {
      const auto p = split(item, '-');
      if (p.size() != 2) bad(e, "notch must be 'lo_hz-hi_hz'");
      spec.notches.emplace_back(to_double(e, p[0]), to_double(e, p[1]));
    }
  } else if (k == "elt.num_subbands") {
    spec.elt.num_subbands = to_int(e);
  } else if (k == "elt.overlap") {
    spec.elt.overlap = to_int(e);
  } else if (k == "elt.sample_rate_hz") {
    spec.elt.sample_rate = to_double(e, v);
  } else if (k == "elt.band_hz") {
    spec.elt.band = to_band(e);
  } else if (k == "elt.num_active") {
    spec.elt.num_active = to_int(e);
  } else if (k == "elt.mask") {
    spec.elt.mask = to_int_list(e);
  } else if (k == "wofdm.fft_size") {
    spec.wofdm.fft_size = to_int(e);
  } else if (k == "wofdm.guard") {
    spec.wofdm.guard = to_int(e);
  } else if (k == "wofdm.rolloff") {
    spec.wofdm.rolloff = to_int(e);
  } else if (k == "wofdm.sample_rate_hz") {
    spec.wofdm.sample_rate = to_double(e, v);
  } else if (k == "wofdm.band_hz") {
    spec.wofdm.band = to_band(e);
  } else if (k == "wofdm.num_active") {
    spec.wofdm.num_active = to_int(e);
  } else if (k == "wofdm.mask") {
    spec.wofdm.mask = to_int_list(e);
  } else {
    bad(e, "unknown key");
  }
}

void apply_config(ExperimentSpec& spec, const std::vector<ConfigEntry>& entries) {
  for (const auto& e : entries) apply_setting(spec, e);
}

ExperimentSpec load_config(const std::filesystem::path& path, ExperimentSpec base) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file '" + path.string() + "'");
  apply_config(base, parse_config(f));
  return base;
}

std::vector<std::pair<std::string, std::string>> config_keys() {
  return {
      {"phy", "elt_mcm | wofdm | both (default both)"},
      {"orders", "ASCET orders, comma list (default 0,1,2)"},
      {"class", "channel class 1, 5 or 9; 0 selects the ideal channel (default 5)"},
      {"realizations", "channel realizations per class (default 100)"},
      {"snr_db", "SNR list 'a,b,c' or range 'start:step:stop' (default 0:5:40)"},
      {"noise", "awgn | bgn (default awgn)"},
      {"psd_file", "background noise PSD table, lines 'freq_hz dbm_per_hz' (default: built-in illustrative PSD)"},
      {"shaping_len", "odd length of the noise shaping filter (default 1025)"},
      {"seed", "base seed; realization r uses seed + r (default 1, or ELTMCM_SEED)"},
      {"ser", "target symbol error rate for the SNR gap (default 1e-3)"},
      {"symbol_variance", "transmit symbol variance (default 1)"},
      {"threads", "worker threads over realizations (default 1)"},
      {"notches", "excluded bands 'lo-hi,lo-hi' in Hz, or none (default: amateur bands)"},
      {"elt.num_subbands", "ELT-MCM subcarriers M (default 512)"},
      {"elt.overlap", "ELT overlap factor kappa, 2 or 3 (default 2)"},
      {"elt.sample_rate_hz", "ELT-MCM sample rate (default 62.5e6)"},
      {"elt.band_hz", "ELT-MCM band 'lo,hi' (default 1.8e6,28e6)"},
      {"elt.num_active", "active ELT-MCM subcarriers after notching and trimming (default 360)"},
      {"elt.mask", "explicit ELT-MCM tone mask, comma list (overrides band)"},
      {"wofdm.fft_size", "windowed-OFDM FFT size (default 4096)"},
      {"wofdm.guard", "guard interval in samples (default 756)"},
      {"wofdm.rolloff", "window roll-off in samples (default 0)"},
      {"wofdm.sample_rate_hz", "windowed-OFDM sample rate (default 100e6)"},
      {"wofdm.band_hz", "windowed-OFDM band 'lo,hi' (default 1.8e6,30e6)"},
      {"wofdm.num_active", "active windowed-OFDM subcarriers (default 917)"},
      {"wofdm.mask", "explicit windowed-OFDM tone mask, comma list (overrides band)"},
  };
}

}  // namespace eltmcm
