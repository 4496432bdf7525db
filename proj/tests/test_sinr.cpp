#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "eltmcm/channel.hpp"
#include "eltmcm/error.hpp"
#include "eltmcm/harness.hpp"
#include "eltmcm/sinr.hpp"
#include "oracles.hpp"

using namespace eltmcm;

namespace {

ChannelRealization taps_channel(std::vector<double> taps) { return {std::move(taps), 1.0, std::nullopt, 0}; }

ChannelRealization random_channel(int length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> a(static_cast<std::size_t>(length));
  a[0] = 1.0;
  for (int l = 1; l < length; ++l) a[l] = 0.5 * std::exp(-0.3 * l) * nd(rng);
  return taps_channel(a);
}

double max_kernel_error(const KernelTable& q, const oracle::Kernel& ref) {
  double worst = 0.0;
  for (int d = std::min(q.min_offset, ref.dmin); d <= std::max(q.max_offset, ref.dmax); ++d)
    for (std::size_t i = 0; i < q.subcarriers.size(); ++i)
      for (std::size_t j = 0; j < q.subcarriers.size(); ++j) {
        const bool in_ref = d >= ref.dmin && d <= ref.dmax;
        const double rc = in_ref ? ref.qc[d - ref.dmin][i][j] : 0.0;
        const double rs = in_ref ? ref.qs[d - ref.dmin][i][j] : 0.0;
        worst = std::max({worst, std::abs(q.cos(i, j, d) - rc), std::abs(q.sin(i, j, d) - rs)});
      }
  return worst;
}

oracle::Mat to_mat(const Eigen::MatrixXd& m) {
  oracle::Mat out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

}  // namespace

TEST_CASE("ideal channel kernel is the identity at offset zero") {
  for (int kappa : {2, 3}) {
    const auto bank = build_bank(make_prototype(16, kappa));
    const auto mask = ToneMask::all(16);
    const auto align = choose_alignment(bank, ideal_channel(1.0), mask);
    const auto q = kernel_q(bank, ideal_channel(1.0), align, mask);
    for (int d = q.min_offset; d <= q.max_offset; ++d)
      for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 16; ++j) CHECK(std::abs(q.cos(i, j, d) - (d == 0 && i == j ? 1.0 : 0.0)) < 1e-10);
  }
}

TEST_CASE("zero channel gives an all-zero kernel") {
  const auto bank = build_bank(make_prototype(8, 2));
  const auto q = kernel_q(bank, taps_channel({0.0, 0.0}), 0, ToneMask::all(8));
  for (int d = q.min_offset; d <= q.max_offset; ++d) {
    CHECK(q.cos_at(d).cwiseAbs().maxCoeff() == 0.0);
    CHECK(q.sin_at(d).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("kernels match the brute-force transmultiplexer oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto p = make_prototype(8, 2);
    const auto bank = build_bank(p);
    const auto mask = ToneMask::from_indices({0, 2, 3, 7}, 8);
    const auto ch = random_channel(5, seed);
    const auto align = choose_alignment(bank, ch, mask);
    const auto q = kernel_q(bank, ch, align, mask);
    const auto ref = oracle::kernel(p.coeffs, 8, ch.taps, align.total_delay(8), mask.active, q.min_offset - 2, q.max_offset + 2);
    CHECK(max_kernel_error(q, ref) < 1e-12);
  }
}

TEST_CASE("alignment maximises own-subcarrier energy over every lag") {
  const auto p = make_prototype(8, 2);
  const auto bank = build_bank(p);
  const auto mask = ToneMask::all(8);
  const auto ch = random_channel(7, 17);
  const auto align = choose_alignment(bank, ch, mask);
  long best_tau = 0;
  double best = -1.0;
  for (long tau = -40; tau <= 80; ++tau) {
    const auto k = oracle::kernel(p.coeffs, 8, ch.taps, tau, mask.active, 0, 0);
    double e = 0.0;
    for (int i = 0; i < 8; ++i) e += k.qc[0][i][i] * k.qc[0][i][i] + k.qs[0][i][i] * k.qs[0][i][i];
    if (e > best * (1.0 + 1e-12)) {
      best = e;
      best_tau = tau;
    }
  }
  CHECK(align.total_delay(8) == best_tau);
  CHECK(align.beta >= 0);
  CHECK(align.beta < 8);
  CHECK(choose_beta(bank, ch, mask) == align.beta);
}

TEST_CASE("pure delays shift beta and the symbol index") {
  const auto bank = build_bank(make_prototype(8, 2));
  const auto mask = ToneMask::all(8);
  const auto base = choose_alignment(bank, ideal_channel(1.0), mask);
  for (int d : {1, 3, 5, 8, 11}) {
    std::vector<double> taps(static_cast<std::size_t>(d + 1), 0.0);
    taps[d] = 1.0;
    const auto a = choose_alignment(bank, taps_channel(taps), mask);
    CHECK(a.beta == ((base.beta - d) % 8 + 8) % 8);
    CHECK(a.total_delay(8) == base.total_delay(8) + d);
  }
  // Channels differing by a delay of M share beta and kernels.
  const auto ch = random_channel(4, 5);
  std::vector<double> shifted(8, 0.0);
  shifted.insert(shifted.end(), ch.taps.begin(), ch.taps.end());
  const auto a1 = choose_alignment(bank, ch, mask);
  const auto a2 = choose_alignment(bank, taps_channel(shifted), mask);
  CHECK(a1.beta == a2.beta);
  CHECK(a2.symbol_delay == a1.symbol_delay + 1);
  const auto q1 = kernel_q(bank, ch, a1, mask);
  const auto q2 = kernel_q(bank, taps_channel(shifted), a2, mask);
  for (int d = -6; d <= 6; ++d)
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(q1.cos(i, j, d) - q2.cos(i, j, d)) < 1e-13);
}

TEST_CASE("alignment_for_beta reproduces the chosen alignment") {
  const auto bank = build_bank(make_prototype(8, 2));
  const auto mask = ToneMask::all(8);
  const auto ch = random_channel(6, 9);
  const auto a = choose_alignment(bank, ch, mask);
  const auto b = alignment_for_beta(bank, ch, mask, a.beta);
  CHECK(b.beta == a.beta);
  CHECK(b.symbol_delay == a.symbol_delay);
  CHECK_THROWS_AS(alignment_for_beta(bank, ch, mask, 8), ParameterError);
}

TEST_CASE("ASCET design on trivial channels") {
  const auto bank = build_bank(make_prototype(16, 2));
  const auto mask = ToneMask::all(16);
  for (int L : {0, 1, 2}) {
    const auto t = design_ascet(bank, ideal_channel(1.0), mask, L);
    for (std::size_t i = 0; i < 16; ++i)
      for (int mu = -L; mu <= L; ++mu) {
        CHECK(std::abs(t.c_at(i, mu) - (mu == 0 ? 1.0 : 0.0)) < 1e-9);
        CHECK(std::abs(t.s_at(i, mu)) < 1e-9);
      }
    const auto t2 = design_ascet(bank, taps_channel({2.0}), mask, L);
    for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(t2.c_at(i, 0) - 0.5) < 1e-9);
  }
  CHECK_THROWS_AS(design_ascet(bank, ideal_channel(1.0), mask, -1), ParameterError);
  const auto z = design_ascet(bank, taps_channel({0.0}), mask, 0);
  CHECK(std::all_of(z.clamped.begin(), z.clamped.end(), [](bool b) { return b; }));
}

TEST_CASE("ideal channel powers") {
  const auto bank = build_bank(make_prototype(16, 2));
  const auto mask = ToneMask::all(16);
  const auto q = kernel_q(bank, ideal_channel(1.0), choose_alignment(bank, ideal_channel(1.0), mask), mask);
  const auto taps = identity_taps(mask, 0);
  const auto p = interference_powers(q, taps, 2.5);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(p.signal[i] == doctest::Approx(2.5).epsilon(1e-10));
    CHECK(p.isi[i] < 1e-20);
    CHECK(p.ici[i] < 1e-20);
  }
  for (double v : power_signal(q, taps, 0.0)) CHECK(v == 0.0);
  // White noise through a unit-norm analysis filter keeps its variance.
  const auto pn = power_noise(bank, taps, std::vector<double>{std::sqrt(0.3)});
  for (std::size_t i = 0; i < 16; ++i) CHECK(pn[i] == doctest::Approx(0.3).epsilon(1e-10));
  for (double v : power_noise(bank, taps, std::vector<double>{0.0})) CHECK(v == 0.0);
}

TEST_CASE("powers follow the symbol variance and the mask") {
  const auto bank = build_bank(make_prototype(16, 2));
  const auto mask = ToneMask::all(16);
  const auto ch = random_channel(8, 4);
  const auto align = choose_alignment(bank, ch, mask);
  const auto q = kernel_q(bank, ch, align, mask);
  const auto taps = design_ascet(bank, ch, align, mask, 1);
  const auto p1 = interference_powers(q, taps, 1.0);
  const auto p4 = interference_powers(q, taps, 4.0);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(p4.isi[i] == doctest::Approx(4.0 * p1.isi[i]).epsilon(1e-12));
    CHECK(p4.signal[i] == doctest::Approx(4.0 * p1.signal[i]).epsilon(1e-12));
  }
  const auto single = ToneMask::from_indices({6}, 16);
  const auto qs = kernel_q(bank, ch, align, single);
  const auto ts = design_ascet(bank, ch, align, single, 1);
  CHECK(power_ici(qs, ts, 1.0)[0] == 0.0);
  // The per-tap appendix form coincides with the exact form for order 0.
  const auto t0 = design_ascet(bank, ch, align, mask, 0);
  const auto e = interference_powers(q, t0, 1.0, PowerForm::exact);
  const auto a = interference_powers(q, t0, 1.0, PowerForm::appendix_per_tap);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(a.isi[i] == doctest::Approx(e.isi[i]).epsilon(1e-12));
    CHECK(a.ici[i] == doctest::Approx(e.ici[i]).epsilon(1e-12));
  }
}

TEST_CASE("analytical powers match a sample-by-sample simulation") {
  const auto p = make_prototype(8, 2);
  const auto bank = build_bank(p);
  const auto mask = ToneMask::all(8);
  const auto ch = random_channel(5, 12);
  const auto align = choose_alignment(bank, ch, mask);
  const auto q = kernel_q(bank, ch, align, mask);
  const double nv = 0.02;
  const auto link = oracle::simulate_elt(p.coeffs, 8, ch.taps, align.total_delay(8), mask.active, 100000, nv, 1, 99);
  const auto taps = design_ascet(bank, ch, align, mask, 1);
  const auto a = interference_powers(q, taps, 1.0);
  const auto pn = power_noise(bank, taps, std::vector<double>{std::sqrt(nv)});
  const auto s = sinr(a.signal, a.isi, a.ici, pn);
  const auto m = oracle::measure_elt(link, to_mat(taps.c), to_mat(taps.s));
  for (std::size_t i = 0; i < 8; ++i) {
    CAPTURE(i);
    CHECK(std::abs(a.signal[i] / m.signal[i] - 1.0) < 0.01);
    CHECK(std::abs(a.isi[i] / m.isi[i] - 1.0) < 0.02);
    CHECK(std::abs(a.ici[i] / m.ici[i] - 1.0) < 0.02);
    CHECK(std::abs(pn[i] / m.noise[i] - 1.0) < 0.02);
    CHECK(std::abs(10.0 * std::log10(s.sinr[i] / m.sinr[i])) < 0.1);
  }
}

TEST_CASE("noise power equals the energy of the equalized noise filter") {
  const auto bank = build_bank(make_prototype(8, 2));
  const auto mask = ToneMask::all(8);
  const auto ch = random_channel(6, 3);
  const auto taps = design_ascet(bank, ch, mask, 2);
  const std::vector<double> b{0.4, -0.2, 0.1};
  const auto pn = power_noise(bank, taps, b);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto nf = equalized_noise_filter(bank, taps, i);
    CHECK(nf.size() == static_cast<std::size_t>(32 + 2 * 2 * 8));
    double e = 0.0;
    for (double v : oracle::convolve(nf, b)) e += v * v;
    CHECK(pn[i] == doctest::Approx(e).epsilon(1e-12));
  }
}

TEST_CASE("SINR edge cases") {
  const std::vector<double> sig{2.0, 1.0, 0.0};
  const std::vector<double> zero{0.0, 0.0, 0.0};
  const std::vector<double> noise{0.5, 0.0, 0.0};
  const auto s = sinr(sig, zero, zero, noise);
  CHECK(s.sinr[0] == 4.0);
  CHECK(std::isinf(s.sinr[1]));
  CHECK(s.sinr[2] == 0.0);
  CHECK(s.undefined[2]);
  CHECK_FALSE(s.undefined[0]);
  CHECK_THROWS_AS(sinr(sig, zero, zero, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("received and in-band noise power on the ideal channel") {
  const auto bank = build_bank(make_prototype(16, 2));
  const auto mask = ToneMask::from_indices({2, 3, 4, 9}, 16);
  CHECK(elt_received_power(bank, ideal_channel(1.0), mask, 2.0) == doctest::Approx(2.0 * 4.0 / 16.0).epsilon(1e-12));
  CHECK(elt_inband_noise(std::vector<double>{1.0}, mask, 16) == doctest::Approx(4.0 / 16.0).epsilon(1e-12));
}

TEST_CASE("equalizer order improves the median SINR on class-5 channels") {
  ExperimentSpec spec;
  const auto bank = build_bank(make_prototype(spec.elt.num_subbands, spec.elt.overlap));
  const auto mask = spec.elt.tone_mask(spec.notches);
  const std::vector<double> b{1.0};
  const double inband = elt_inband_noise(b, mask, spec.elt.num_subbands);
  std::vector<double> pooled[3];
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto ch = gen_channel(5, spec.elt.sample_rate, 1000 + seed);
    const auto align = choose_alignment(bank, ch, mask);
    const auto q = kernel_q(bank, ch, align, mask);
    const double s = elt_received_power(bank, ch, mask, 1.0) / (100.0 * inband);
    for (int L = 0; L <= 2; ++L) {
      const auto taps = design_ascet(bank, ch, align, mask, L);
      const auto p = interference_powers(q, taps, 1.0);
      auto pn = power_noise(bank, taps, b);
      for (double& v : pn) v *= s;
      const auto prof = sinr(p.signal, p.isi, p.ici, pn);
      pooled[L].insert(pooled[L].end(), prof.sinr.begin(), prof.sinr.end());
    }
  }
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  const double m0 = median(pooled[0]), m1 = median(pooled[1]), m2 = median(pooled[2]);
  CHECK(m2 >= m1);
  CHECK(m1 >= m0);
}

TEST_CASE("tap and kernel CSV output") {
  const auto bank = build_bank(make_prototype(8, 2));
  const auto mask = ToneMask::from_indices({1, 5}, 8);
  const auto ch = random_channel(4, 2);
  const auto taps = design_ascet(bank, ch, mask, 1);
  std::stringstream ss;
  write_taps_csv(ss, taps);
  const auto back = read_taps_csv(ss);
  CHECK(back.order == 1);
  CHECK(back.subcarriers == taps.subcarriers);
  CHECK((back.c - taps.c).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.s - taps.s).cwiseAbs().maxCoeff() == 0.0);

  std::stringstream ks;
  write_kernel_csv(ks, kernel_q(bank, ch, choose_alignment(bank, ch, mask), mask));
  std::string header;
  std::getline(ks, header);
  CHECK(header == "k0,k,offset,qc,qs");

  std::stringstream bad("k,mu,c,s\n1,0,abc,0\n");
  CHECK_THROWS_AS(read_taps_csv(bad), IoError);
}
