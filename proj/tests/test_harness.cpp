#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "eltmcm/cli.hpp"
#include "eltmcm/config.hpp"
#include "eltmcm/error.hpp"
#include "eltmcm/harness.hpp"
#include "json.hpp"

using namespace eltmcm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("eltmcm_test_" + std::to_string(std::rand()))) { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "eltmcm");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.realizations = 2;
  s.snr_db = {0, 20};
  s.orders = {0, 2};
  return s;
}

}  // namespace

TEST_CASE("default tone masks hold the configured counts") {
  const ExperimentSpec spec;
  const auto elt = spec.elt.tone_mask(spec.notches);
  CHECK(elt.size() == 360);
  CHECK(spec.elt.spacing() == 61035.15625);
  for (int k : elt.active) {
    const double lo = k * spec.elt.spacing(), hi = (k + 1) * spec.elt.spacing();
    CHECK(lo >= 1.8e6);
    CHECK(hi <= 28e6);
    for (const auto& n : spec.notches) CHECK((hi <= n.first || lo >= n.second));
  }
  const auto w = spec.wofdm.config(spec.notches);
  CHECK(w.active.size() == 917);
  CHECK(w.active.active.back() * spec.wofdm.spacing() <= 30e6);
  CHECK_THROWS_AS(build_tone_mask(512, 61035.15625, false, {1.8e6, 28e6}, {}, 500), ParameterError);
}

TEST_CASE("ideal-channel throughput increases with SNR") {
  ExperimentSpec spec;
  spec.phy = Phy::elt_mcm;
  spec.channel_class = 0;
  spec.realizations = 1;
  spec.orders = {0};
  spec.snr_db = {0, 10, 20};
  const auto r = run_sweep(spec);
  REQUIRE(r.summary.size() == 3);
  CHECK(r.summary[0].mean_bps < r.summary[1].mean_bps);
  CHECK(r.summary[1].mean_bps < r.summary[2].mean_bps);
}

TEST_CASE("sweeps are reproducible and independent of the thread count") {
  auto spec = small_spec();
  const auto a = run_sweep(spec);
  const auto b = run_sweep(spec);
  spec.threads = 2;
  const auto c = run_sweep(spec);
  REQUIRE(a.cells.size() == b.cells.size());
  REQUIRE(a.cells.size() == c.cells.size());
  std::stringstream sa, sb, sc;
  write_sweep_csv(sa, a);
  write_sweep_csv(sb, b);
  write_sweep_csv(sc, c);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str() == sc.str());
  CHECK(a.spec_hash == c.spec_hash);
  CHECK(a.realization_seeds == std::vector<std::uint64_t>{1, 2});
  // 2 realizations x 2 SNRs x (2 ELT orders + 1 windowed-OFDM)
  CHECK(a.cells.size() == 12);
  CHECK(a.summary.size() == 6);
  for (const auto& s : a.summary) {
    CHECK(s.n == 2);
    CHECK(s.failed == 0);
  }
}

TEST_CASE("sweep CSV re-ingests exactly") {
  const auto r = run_sweep(small_spec());
  std::stringstream ss;
  write_sweep_csv(ss, r);
  const auto cells = read_sweep_csv(ss);
  REQUIRE(cells.size() == r.cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CHECK(cells[i].system == r.cells[i].system);
    CHECK(cells[i].equalizer_order == r.cells[i].equalizer_order);
    CHECK(cells[i].snr_db == r.cells[i].snr_db);
    CHECK(cells[i].realization == r.cells[i].realization);
    CHECK(cells[i].throughput_bps == r.cells[i].throughput_bps);
  }
  const auto again = summarize(cells);
  REQUIRE(again.size() == r.summary.size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    CHECK(again[i].mean_bps == r.summary[i].mean_bps);
    CHECK(again[i].std_bps == r.summary[i].std_bps);
  }
  std::stringstream bad("wrong,header\n");
  CHECK_THROWS_AS(read_sweep_csv(bad), IoError);
}

TEST_CASE("failed cells are excluded from the mean and counted") {
  std::vector<SweepCell> cells{{"elt_mcm", 0, 10, 0, 1e6, true, {}},
                               {"elt_mcm", 0, 10, 1, std::nan(""), false, "kernel: boom"},
                               {"elt_mcm", 0, 10, 2, 3e6, true, {}}};
  const auto s = summarize(cells);
  REQUIRE(s.size() == 1);
  CHECK(s[0].n == 2);
  CHECK(s[0].failed == 1);
  CHECK(s[0].mean_bps == 2e6);
  CHECK(s[0].std_bps == doctest::Approx(std::sqrt(2.0) * 1e6).epsilon(1e-12));
  SweepResult r;
  r.cells = cells;
  r.summary = s;
  std::stringstream ss;
  write_sweep_csv(ss, r);
  CHECK(ss.str().find("elt_mcm,0,10,1,nan") != std::string::npos);
  std::stringstream meta;
  write_sweep_metadata(meta, r, ExperimentSpec{});
  const auto j = nlohmann::json::parse(meta.str());
  REQUIRE(j["failures"].size() == 1);
  CHECK(j["failures"][0]["error"] == "kernel: boom");
}

TEST_CASE("spec hash tracks the canonical text") {
  ExperimentSpec a, b;
  CHECK(spec_hash(a) == spec_hash(b));
  CHECK(spec_hash(a).size() == 16);
  b.threads = 4;
  CHECK(spec_hash(a) == spec_hash(b));
  b.seed = 2;
  CHECK(spec_hash(a) != spec_hash(b));
}

TEST_CASE("spec validation") {
  ExperimentSpec s;
  s.channel_class = 4;
  CHECK_THROWS_AS(s.validate(), ParameterError);
  s = ExperimentSpec{};
  s.snr_db.clear();
  CHECK_THROWS_AS(s.validate(), ParameterError);
  s = ExperimentSpec{};
  s.orders = {-1};
  CHECK_THROWS_AS(s.validate(), ParameterError);
}

TEST_CASE("config parsing") {
  std::stringstream ss(
      "# sweep\nphy = elt_mcm\norders = 0,2\nclass=9\nsnr_db = 0:10:40 # range\nnoise = bgn\n"
      "notches = none\nelt.band_hz = 2e6, 20e6\nseed = 77\n");
  ExperimentSpec spec;
  apply_config(spec, parse_config(ss));
  CHECK(spec.phy == Phy::elt_mcm);
  CHECK(spec.orders == std::vector<int>{0, 2});
  CHECK(spec.channel_class == 9);
  CHECK(spec.snr_db == std::vector<double>{0, 10, 20, 30, 40});
  CHECK(spec.noise == NoiseKind::psd);
  CHECK(spec.notches.empty());
  CHECK(spec.elt.band == Band{2e6, 20e6});
  CHECK(spec.seed == 77);

  CHECK(parse_number_list("1.5, 2.5") == std::vector<double>{1.5, 2.5});
  CHECK_THROWS_AS(parse_number_list("1:0:5"), ConfigError);

  std::stringstream dup("seed = 1\nseed = 2\n");
  CHECK_THROWS_AS(parse_config(dup), ConfigError);
  std::stringstream noeq("seed 1\n");
  CHECK_THROWS_AS(parse_config(noeq), ConfigError);
  CHECK_THROWS_AS(apply_setting(spec, {"bogus", "1", 3}), ConfigError);
  CHECK_THROWS_AS(apply_setting(spec, {"realizations", "ten", 3}), ConfigError);
  CHECK_THROWS_AS(apply_setting(spec, {"phy", "dmt", 3}), ConfigError);
  CHECK_THROWS_AS(apply_setting(spec, {"psd_file", "/nonexistent/psd.txt", 3}), IoError);
  CHECK_THROWS_AS(load_config("/nonexistent/run.conf"), IoError);
  // Every documented key is accepted by the parser.
  for (const auto& [key, help] : config_keys()) {
    CAPTURE(key);
    CHECK_FALSE(help.empty());
  }
}

TEST_CASE("command line: usage, configuration and file errors have distinct exit codes") {
  TempDir tmp;
  CHECK(run_cli({"--bogus"}) == 2);
  CHECK(run_cli({}) == 2);
  CHECK(run_cli({"sweep", "--config", tmp.file("missing.conf")}) == 4);
  {
    std::ofstream f(tmp.file("bad.conf"));
    f << "realizations = many\n";
  }
  CHECK(run_cli({"sweep", "--config", tmp.file("bad.conf")}) == 3);
  CHECK(run_cli({"sweep", "--set", "nonsense"}) == 3);
  CHECK(run_cli({"sweep", "--set", "class=4"}) == 3);
  CHECK(run_cli({"validate"}) == 2);
  CHECK(run_cli({"channel", "import", tmp.file("none.txt")}) == 4);
}

TEST_CASE("command line: prototype and channel round trip") {
  TempDir tmp;
  CHECK(run_cli({"prototype", "-M", "16", "-k", "3", "-o", tmp.file("p.txt")}) == 0);
  CHECK(run_cli({"prototype", "--import", tmp.file("p.txt")}) == 0);
  {
    std::ofstream f(tmp.file("rect.txt"));
    f << "8 2\n";
    for (int i = 0; i < 32; ++i) f << "1\n";
  }
  CHECK(run_cli({"prototype", "--import", tmp.file("rect.txt")}) == 1);
  CHECK(run_cli({"channel", "gen", "--class", "9", "--seed", "4", "-o", tmp.file("ch.txt")}) == 0);
  CHECK(run_cli({"channel", "import", tmp.file("ch.txt")}) == 0);
  CHECK(run_cli({"sinr", "--channel-file", tmp.file("ch.txt"), "--snr", "25", "-o", tmp.file("s.csv"), "--rate-out",
                 tmp.file("r.csv")}) == 0);
  const auto rate = lines_of(slurp(tmp.file("r.csv")));
  CHECK(rate.front() == "k,sinr_db,capacity_bits");
  CHECK(rate.size() == 1 + 360 + 2);
  CHECK(lines_of(slurp(tmp.file("s.csv"))).size() == 1 + 360);
  // A 62.5 MHz channel cannot drive the 100 MHz windowed-OFDM PHY.
  CHECK(run_cli({"sinr", "--phy", "wofdm", "--channel-file", tmp.file("ch.txt")}) == 5);
  CHECK(run_cli({"sinr", "--phy", "wofdm", "--class", "1", "--rate-out", tmp.file("w.csv")}) == 0);
  CHECK(lines_of(slurp(tmp.file("w.csv"))).size() == 1 + 917 + 2);
}

TEST_CASE("command line: sweep and compare outputs") {
  TempDir tmp;
  {
    std::ofstream f(tmp.file("run.conf"));
    f << "phy = elt_mcm\nrealizations = 1\nclass = 5\n";
  }
  CHECK(run_cli({"sweep", "-c", tmp.file("run.conf"), "-o", tmp.file("s")}) == 0);
  const auto summary = lines_of(slurp(tmp.file("s_summary.csv")));
  CHECK(summary.front() == "system,equalizer_order,snr_db,mean_throughput_bps,std_bps,n");
  CHECK(summary.size() == 1 + 9 * 3);
  CHECK(lines_of(slurp(tmp.file("s.csv"))).size() == 1 + 9 * 3);

  setenv("ELTMCM_SEED", "31", 1);
  CHECK(run_cli({"compare", "--realizations", "1", "--set", "snr_db=10,30", "-o", tmp.file("c")}) == 0);
  unsetenv("ELTMCM_SEED");
  const auto text = slurp(tmp.file("c_summary.csv"));
  CHECK(text.find("\nelt_mcm,2,30,") != std::string::npos);
  CHECK(text.find("\nwofdm,0,30,") != std::string::npos);
  const auto meta = nlohmann::json::parse(slurp(tmp.file("c_meta.json")));
  CHECK(meta["seed"] == 31);
  CHECK(meta["version"] == kToolVersion);
}

TEST_CASE("validation suite: ideal channel is exact and fault injection is caught") {
  ValidationOptions opt;
  opt.ideal_channel = true;
  opt.num_symbols = 20000;
  opt.num_noise_symbols = 20000;
  const auto ideal = run_validation(opt);
  for (const auto& e : ideal.entries) {
    CAPTURE(e.quantity);
    CHECK(e.pass);
  }
  CHECK(ideal.passed());

  ValidationOptions bad;
  bad.corrupt_noise_taps = true;
  bad.num_symbols = 20000;
  bad.num_noise_symbols = 200000;
  bad.include_wofdm = false;
  const auto rep = run_validation(bad);
  CHECK_FALSE(rep.passed());
  int noise_entries = 0;
  for (const auto& e : rep.entries) {
    if (e.quantity == "kernel") CHECK(e.pass);
    if (e.quantity.rfind("noise", 0) == 0) {
      ++noise_entries;
      CHECK_FALSE(e.pass);
    }
  }
  CHECK(noise_entries == 3);
}
