#include "eltmcm/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eltmcm/channel.hpp"
#include "eltmcm/config.hpp"
#include "eltmcm/error.hpp"
#include "eltmcm/harness.hpp"
#include "eltmcm/prototype.hpp"
#include "eltmcm/rate.hpp"
#include "eltmcm/sinr.hpp"

namespace eltmcm {

namespace {

enum Exit { kOk = 0, kValidationFailed = 1, kUsage = 2, kConfig = 3, kFile = 4, kStage = 5 };

// Failure inside a named processing stage.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what) : Error(stage + " failed: " + what) {}
};

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const IoError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  return f;
}

struct SpecOptions {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> realizations;
  std::optional<int> cls;
  std::optional<int> threads;
};

void add_spec_options(CLI::App* app, SpecOptions& o) {
  app->add_option("-c,--config", o.config, "key=value configuration file");
  app->add_option("--set", o.sets, "override a configuration key (key=value), repeatable");
  app->add_option("--seed", o.seed, "base seed (default: ELTMCM_SEED or 1)");
  app->add_option("--realizations", o.realizations, "channel realizations");
  app->add_option("--class", o.cls, "channel class 1, 5 or 9 (0 for ideal)");
  app->add_option("--threads", o.threads, "worker threads");
}

ExperimentSpec build_spec(const SpecOptions& o) {
  ExperimentSpec spec;
  if (const char* env = std::getenv("ELTMCM_SEED")) {
    try {
      spec.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("ELTMCM_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  if (!o.config.empty()) spec = load_config(o.config, spec);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + s + "' must be key=value");
    apply_setting(spec, {s.substr(0, eq), s.substr(eq + 1), 0});
  }
  if (o.seed) spec.seed = *o.seed;
  if (o.realizations) spec.realizations = *o.realizations;
  if (o.cls) spec.channel_class = *o.cls;
  if (o.threads) spec.threads = *o.threads;
  try {
    spec.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("invalid experiment: ") + e.what());
  }
  return spec;
}

void print_summary(const SweepResult& r) {
  std::cout << "system,equalizer_order,snr_db,mean_mbps,std_mbps,n,failed\n" << std::fixed << std::setprecision(3);
  for (const auto& s : r.summary)
    std::cout << s.system << ',' << s.equalizer_order << ',' << s.snr_db << ',' << s.mean_bps / 1e6 << ','
              << s.std_bps / 1e6 << ',' << s.n << ',' << s.failed << '\n';
  std::cout << std::defaultfloat;
}

int write_sweep_outputs(const SweepResult& r, const ExperimentSpec& spec, const std::string& prefix) {
  {
    auto f = open_out(prefix + ".csv");
    write_sweep_csv(f, r);
  }
  {
    auto f = open_out(prefix + "_summary.csv");
    write_summary_csv(f, r);
  }
  {
    auto f = open_out(prefix + "_meta.json");
    write_sweep_metadata(f, r, spec);
  }
  print_summary(r);
  int failed = 0;
  for (const auto& s : r.summary) failed += s.failed;
  if (failed > 0) std::cerr << "warning: " << failed << " cells failed; see " << prefix << "_meta.json\n";
  return kOk;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"ELT-MCM (wavelet-OFDM) and windowed-OFDM throughput analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  // prototype
  auto* proto = app.add_subcommand("prototype", "generate, certify or export a prototype window");
  int proto_m = 512, proto_k = 2;
  std::string proto_out, proto_import;
  proto->add_option("-M,--subbands", proto_m, "number of subcarriers (power of two >= 4)");
  proto->add_option("-k,--overlap", proto_k, "overlap factor (2 or 3)");
  proto->add_option("-o,--out", proto_out, "write the coefficients to this file");
  proto->add_option("--import", proto_import, "certify coefficients from this file instead of generating");

  // channel
  auto* chan = app.add_subcommand("channel", "generate, export or import channel realizations");
  chan->require_subcommand(1);
  auto* chan_gen = chan->add_subcommand("gen", "generate a realization");
  int gen_class = 5;
  double gen_fs = 62.5e6;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  chan_gen->add_option("--class", gen_class, "channel class 1, 5 or 9");
  chan_gen->add_option("--fs", gen_fs, "sample rate in Hz");
  chan_gen->add_option("--seed", gen_seed, "realization seed");
  chan_gen->add_option("-o,--out", gen_out, "export to this channel file (default: stdout)");
  auto* chan_imp = chan->add_subcommand("import", "read and summarize a channel file");
  std::string imp_file;
  chan_imp->add_option("file", imp_file, "channel file")->required();

  // sinr
  auto* sinr_cmd = app.add_subcommand("sinr", "single-realization SINR and rate profile");
  SpecOptions sinr_opts;
  add_spec_options(sinr_cmd, sinr_opts);
  std::string sinr_phy = "elt_mcm", sinr_channel, sinr_out, sinr_rate_out;
  double sinr_snr = 20.0;
  int sinr_order = 2, sinr_realization = 0;
  sinr_cmd->add_option("--phy", sinr_phy, "elt_mcm or wofdm")->check(CLI::IsMember({"elt_mcm", "wofdm"}));
  sinr_cmd->add_option("--snr", sinr_snr, "SNR in dB");
  sinr_cmd->add_option("--order", sinr_order, "ASCET order (ELT-MCM only)");
  sinr_cmd->add_option("--realization", sinr_realization, "realization index (seed + index)");
  sinr_cmd->add_option("--channel-file", sinr_channel, "use this impulse response instead of generating one");
  sinr_cmd->add_option("-o,--out", sinr_out, "SINR profile CSV");
  sinr_cmd->add_option("--rate-out", sinr_rate_out, "rate report CSV");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "SNR sweep averaged over channel realizations");
  SpecOptions sweep_opts;
  add_spec_options(sweep, sweep_opts);
  std::string sweep_out = "sweep";
  sweep->add_option("-o,--out", sweep_out, "output prefix (<prefix>.csv, _summary.csv, _meta.json)");

  // validate
  auto* val = app.add_subcommand("validate", "analytical versus time-domain validation");
  bool val_toy = false, val_corrupt = false, val_ideal = false;
  std::size_t val_symbols = 100000;
  std::uint64_t val_seed = 7;
  val->add_flag("--toy", val_toy, "run the toy-size suite (M=16, kappa=2)");
  val->add_flag("--ideal", val_ideal, "use the ideal channel and no noise");
  val->add_flag("--corrupt-noise-taps", val_corrupt, "fault injection on the analytical noise path");
  val->add_option("--symbols", val_symbols, "simulated symbols per quantity");
  val->add_option("--seed", val_seed, "simulation seed");

  // compare
  auto* cmp = app.add_subcommand("compare", "both PHYs over the same realizations, figure-ready CSV");
  SpecOptions cmp_opts;
  add_spec_options(cmp, cmp_opts);
  std::string cmp_out = "compare";
  cmp->add_option("-o,--out", cmp_out, "output prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*proto) {
      PrototypeFilter p;
      if (!proto_import.empty()) {
        auto f = open_in(proto_import);
        p = read_prototype(f);
      } else {
        p = stage("prototype design", [&] { return make_prototype(proto_m, proto_k); });
      }
      const double residual = stage("PR check", [&] { return check_pr(p); });
      std::cout << "M=" << p.num_subbands << " kappa=" << p.overlap << " length=" << p.length()
                << " pr_residual=" << std::scientific << std::setprecision(3) << residual
                << " certified=" << (p.certified ? "yes" : "no") << '\n';
      if (!proto_out.empty()) {
        auto f = open_out(proto_out);
        write_prototype(f, p);
      }
      return p.certified ? kOk : kValidationFailed;
    }

    if (*chan) {
      if (*chan_gen) {
        const auto ch = stage("channel generation", [&] { return gen_channel(gen_class, gen_fs, gen_seed); });
        if (gen_out.empty()) {
          write_channel(std::cout, ch);
        } else {
          auto f = open_out(gen_out);
          write_channel(f, ch);
          std::cout << "wrote " << ch.taps.size() << " taps at " << gen_fs << " Hz to " << gen_out << '\n';
        }
        return kOk;
      }
      auto f = open_in(imp_file);
      const auto ch = read_channel(f);
      double energy = 0.0;
      for (double a : ch.taps) energy += a * a;
      const double hi = std::min(28e6, ch.sample_rate / 2.0);
      const double lo = std::min(1.8e6, hi / 2.0);
      std::cout << "taps=" << ch.taps.size() << " sample_rate=" << ch.sample_rate << " energy=" << energy
                << " mean_band_gain_db=" << 10.0 * std::log10(mean_band_gain(ch, lo, hi)) << '\n';
      return kOk;
    }

    if (*sinr_cmd) {
      auto spec = build_spec(sinr_opts);
      const std::uint64_t seed = spec.seed + static_cast<std::uint64_t>(sinr_realization);
      std::optional<ChannelRealization> file_ch;
      if (!sinr_channel.empty()) {
        auto f = open_in(sinr_channel);
        file_ch = read_channel(f);
      }
      const auto& table = spec.psd.empty() ? default_bgn_psd() : spec.psd;
      auto noise_taps = [&](double fs) {
        return spec.noise == NoiseKind::awgn ? std::vector<double>{1.0}
                                             : psd_to_shaping(table, fs, spec.shaping_len).taps;
      };
      RateReport report;
      if (sinr_phy == "elt_mcm") {
        const auto bank = stage("prototype design", [&] { return build_bank(make_prototype(spec.elt.num_subbands, spec.elt.overlap)); });
        const auto mask = stage("tone mask", [&] { return spec.elt.tone_mask(spec.notches); });
        const auto ch = file_ch ? *file_ch
                                : stage("channel generation", [&] {
                                    return spec.channel_class == 0 ? ideal_channel(spec.elt.sample_rate)
                                                                   : gen_channel(spec.channel_class, spec.elt.sample_rate, seed);
                                  });
        if (std::abs(ch.sample_rate - spec.elt.sample_rate) > 1e-9 * spec.elt.sample_rate)
          throw StageError("channel", "channel sample rate differs from elt.sample_rate_hz");
        const auto profile = stage("sinr analysis", [&] {
          const auto align = choose_alignment(bank, ch, mask);
          const auto q = kernel_q(bank, ch, align, mask);
          const auto taps = design_ascet(bank, ch, align, mask, sinr_order);
          const auto p = interference_powers(q, taps, spec.symbol_variance);
          const auto b = noise_taps(ch.sample_rate);
          const double prx = elt_received_power(bank, ch, mask, spec.symbol_variance);
          const double s = prx / (std::pow(10.0, sinr_snr / 10.0) * elt_inband_noise(b, mask, spec.elt.num_subbands));
          auto pn = power_noise(bank, taps, b);
          for (double& v : pn) v *= s;
          auto prof = sinr(p.signal, p.isi, p.ici, pn);
          prof.subcarriers = mask.active;
          prof.symbol_variance = spec.symbol_variance;
          prof.beta = align.beta;
          prof.order = sinr_order;
          return prof;
        });
        if (!sinr_out.empty()) {
          auto f = open_out(sinr_out);
          write_sinr_csv(f, profile);
        }
        report = stage("rate", [&] {
          return rate_report(mask.active, profile.sinr, gap_pam(spec.ser), spec.ser, spec.elt.spacing(),
                             spec.elt.num_subbands, 0);
        });
      } else {
        const auto cfg = stage("tone mask", [&] { return spec.wofdm.config(spec.notches); });
        const auto ch = file_ch ? *file_ch
                                : stage("channel generation", [&] {
                                    return spec.channel_class == 0 ? ideal_channel(spec.wofdm.sample_rate)
                                                                   : gen_channel(spec.channel_class, spec.wofdm.sample_rate, seed);
                                  });
        const auto prof = stage("windowed-OFDM analysis", [&] {
          const auto b0 = noise_taps(cfg.sample_rate());
          const auto unit = wofdm_sinr(cfg, ch, b0, spec.symbol_variance);
          const double s = unit.received_power / (std::pow(10.0, sinr_snr / 10.0) * wofdm_inband_noise(b0, cfg));
          std::vector<double> b(b0);
          for (double& v : b) v *= std::sqrt(s);
          return wofdm_sinr(cfg, ch, b, spec.symbol_variance);
        });
        if (!sinr_out.empty()) {
          auto f = open_out(sinr_out);
          f << "k,channel_gain,signal_gain,noise,interference,sinr,sinr_db\n" << std::setprecision(17);
          for (std::size_t i = 0; i < prof.sinr.size(); ++i)
            f << prof.subcarriers[i] << ',' << prof.channel_gain[i] << ',' << prof.signal_gain[i] << ','
              << prof.noise[i] << ',' << prof.interference[i] << ',' << prof.sinr[i] << ','
              << 10.0 * std::log10(prof.sinr[i]) << '\n';
        }
        report = stage("rate", [&] {
          return rate_report(cfg.active.active, prof.sinr, gap_qam(spec.ser), spec.ser, spec.wofdm.spacing(),
                             spec.wofdm.fft_size, spec.wofdm.guard);
        });
      }
      if (!sinr_rate_out.empty()) {
        auto f = open_out(sinr_rate_out);
        write_rate_csv(f, report);
      }
      std::cout << sinr_phy << " snr_db=" << sinr_snr << " throughput_mbps=" << std::fixed << std::setprecision(3)
                << report.throughput / 1e6 << '\n';
      return kOk;
    }

    if (*sweep) {
      const auto spec = build_spec(sweep_opts);
      const auto r = run_sweep(spec);
      return write_sweep_outputs(r, spec, sweep_out);
    }

    if (*val) {
      if (!val_toy && !val_ideal) {
        std::cerr << "validate: choose a suite with --toy or --ideal\n";
        return kUsage;
      }
      ValidationOptions opt;
      opt.ideal_channel = val_ideal;
      opt.corrupt_noise_taps = val_corrupt;
      opt.num_symbols = val_symbols;
      opt.num_noise_symbols = 10 * val_symbols;
      opt.seed = val_seed;
      const auto rep = stage("validation", [&] { return run_validation(opt); });
      write_validation_report(std::cout, rep);
      return rep.passed() ? kOk : kValidationFailed;
    }

    if (*cmp) {
      auto spec = build_spec(cmp_opts);
      spec.phy = Phy::both;
      const auto r = run_sweep(spec);
      return write_sweep_outputs(r, spec, cmp_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "file error: " << e.what() << '\n';
    return kFile;
  } catch (const StageError& e) {
    std::cerr << e.what() << '\n';
    return kStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStage;
  }
  return kUsage;
}

}  // namespace eltmcm
