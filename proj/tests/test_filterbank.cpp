#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "eltmcm/channel.hpp"
#include "eltmcm/error.hpp"
#include "eltmcm/filterbank.hpp"
#include "eltmcm/montecarlo.hpp"
#include "eltmcm/sinr.hpp"
#include "oracles.hpp"

using namespace eltmcm;

namespace {

Eigen::MatrixXd random_frame(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  oracle::Pam4 pam(seed);
  Eigen::MatrixXd X(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) X(i, j) = pam();
  return X;
}

}  // namespace

TEST_CASE("bank coefficients match the modulation formula") {
  const auto p = make_prototype(8, 2);
  const auto bank = build_bank(p);
  const double f00 = std::sqrt(2.0 / 8.0) * p.coeffs[0] * std::cos(0.5 * (std::numbers::pi / 8.0) * 4.5);
  CHECK(bank.synth(0, 0) == doctest::Approx(f00).epsilon(1e-15));
  for (int k = 0; k < 8; ++k) {
    const auto f = oracle::synthesis(p.coeffs, 8, k);
    const auto hs = oracle::analysis_sin(p.coeffs, 8, k);
    for (int n = 0; n < 32; ++n) {
      CHECK(bank.synth(k, n) == doctest::Approx(f[n]).epsilon(1e-13).scale(1.0));
      CHECK(bank.analysis_cos(k, n) - bank.synth(k, 31 - n) == 0.0);
      CHECK(bank.analysis_sin(k, n) == doctest::Approx(hs[n]).epsilon(1e-13).scale(1.0));
    }
  }
}

TEST_CASE("phase pi flips the sign of a subcarrier") {
  const auto p = make_prototype(8, 2);
  std::vector<double> phases(8, 0.0);
  phases[3] = std::numbers::pi;
  const auto a = build_bank(p);
  const auto b = build_bank(p, phases);
  CHECK((a.synth.row(3) + b.synth.row(3)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((a.synth.row(2) - b.synth.row(2)).cwiseAbs().maxCoeff() == 0.0);
  phases[3] = 1.0;
  CHECK_THROWS_AS(build_bank(p, phases), ParameterError);
}

TEST_CASE("single unit symbol modulates to its synthesis filter") {
  const auto bank = build_bank(make_prototype(8, 2));
  SymbolFrame frame{Eigen::MatrixXd::Zero(8, 1), 1.0};
  frame.symbols(5, 0) = 1.0;
  const auto x = modulate(frame, bank, ToneMask::all(8));
  REQUIRE(x.size() == 32);
  for (int n = 0; n < 32; ++n) CHECK(x[n] == bank.synth(5, n));
}

TEST_CASE("consecutive symbols overlap by 2 kappa M - M samples") {
  const auto bank = build_bank(make_prototype(8, 2));
  const auto mask = ToneMask::from_indices({2}, 8);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, 2), b = a;
  a(0, 0) = 1.0;
  b(0, 1) = 1.0;
  const auto xa = modulate_active(a, bank, mask);
  const auto xb = modulate_active(b, bank, mask);
  int overlap = 0;
  for (std::size_t n = 0; n < xa.size(); ++n)
    if (xa[n] != 0.0 && xb[n] != 0.0) ++overlap;
  CHECK(overlap == 32 - 8);
}

TEST_CASE("modulation is linear") {
  const auto bank = build_bank(make_prototype(16, 3));
  const auto mask = ToneMask::all(16);
  const auto F1 = random_frame(16, 40, 1);
  const auto F2 = random_frame(16, 40, 2);
  const auto x = modulate_active(0.7 * F1 - 1.3 * F2, bank, mask);
  const auto x1 = modulate_active(F1, bank, mask);
  const auto x2 = modulate_active(F2, bank, mask);
  for (std::size_t n = 0; n < x.size(); ++n) CHECK(std::abs(x[n] - (0.7 * x1[n] - 1.3 * x2[n])) < 1e-12);
}

TEST_CASE("modulation matches direct summation") {
  const auto p = make_prototype(8, 2);
  const auto bank = build_bank(p);
  const auto mask = ToneMask::from_indices({1, 4, 6}, 8);
  const auto X = random_frame(3, 12, 3);
  const auto x = modulate_active(X, bank, mask);
  std::vector<double> ref(x.size(), 0.0);
  for (int i = 0; i < 3; ++i) {
    const auto f = oracle::synthesis(p.coeffs, 8, mask.active[i]);
    for (int m = 0; m < 12; ++m)
      for (int n = 0; n < 32; ++n) ref[m * 8 + n] += X(i, m) * f[n];
  }
  for (std::size_t n = 0; n < x.size(); ++n) CHECK(std::abs(x[n] - ref[n]) < 1e-13);
}

TEST_CASE("inactive rows must be empty") {
  const auto bank = build_bank(make_prototype(8, 2));
  SymbolFrame frame{Eigen::MatrixXd::Zero(8, 3), 1.0};
  frame.symbols(0, 1) = 1.0;
  CHECK_THROWS_AS(modulate(frame, bank, ToneMask::from_indices({1, 2}, 8)), DimensionError);
  SymbolFrame wrong{Eigen::MatrixXd::Zero(7, 3), 1.0};
  CHECK_THROWS_AS(modulate(wrong, bank, ToneMask::all(8)), DimensionError);
  CHECK_THROWS_AS(ToneMask::from_indices({3, 2}, 8), ParameterError);
  CHECK_THROWS_AS(ToneMask::from_indices({8}, 8), ParameterError);
}

TEST_CASE("demodulation matches direct correlation") {
  const auto p = make_prototype(8, 2);
  const auto bank = build_bank(p);
  const auto mask = ToneMask::from_indices({0, 3, 7}, 8);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  std::vector<double> y(200);
  for (double& v : y) v = nd(rng);
  const int beta = 3;
  const auto r = demodulate(y, bank, beta, mask);
  for (int i = 0; i < 3; ++i) {
    const auto hc = oracle::analysis_cos(p.coeffs, 8, mask.active[i]);
    const auto hs = oracle::analysis_sin(p.coeffs, 8, mask.active[i]);
    for (Eigen::Index c = 0; c < r.cos.cols(); ++c) {
      const long n = r.first_symbol + c;
      double ac = 0.0, as = 0.0;
      for (int t = 0; t < 32; ++t) {
        const long idx = n * 8 - beta - t;
        REQUIRE(idx >= 0);
        REQUIRE(idx < 200);
        ac += hc[t] * y[idx];
        as += hs[t] * y[idx];
      }
      CHECK(std::abs(r.cos(i, c) - ac) < 1e-12);
      CHECK(std::abs(r.sin(i, c) - as) < 1e-12);
    }
  }
  // Every output with full context is present and nothing more.
  CHECK(r.first_symbol * 8 - beta - 31 >= 0);
  CHECK((r.first_symbol - 1) * 8 - beta - 31 < 0);
  const long last = r.first_symbol + r.cos.cols() - 1;
  CHECK(last * 8 - beta <= 199);
  CHECK((last + 1) * 8 - beta > 199);
}

TEST_CASE("zero stream demodulates to zero and short streams are rejected") {
  const auto bank = build_bank(make_prototype(8, 2));
  std::vector<double> zeros(100, 0.0);
  const auto r = demodulate(zeros, bank, 0, ToneMask::all(8));
  CHECK(r.cos.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.sin.cwiseAbs().maxCoeff() == 0.0);
  std::vector<double> tiny(10, 1.0);
  CHECK_THROWS_AS(demodulate(tiny, bank, 0, ToneMask::all(8)), DimensionError);
}

TEST_CASE("ideal-channel round trip reproduces symbols") {
  for (int kappa : {2, 3}) {
    const int M = 16;
    const auto bank = build_bank(make_prototype(M, kappa));
    const auto mask = ToneMask::all(M);
    const auto ch = ideal_channel(1.0);
    const auto align = choose_alignment(bank, ch, mask);
    const auto X = random_frame(M, 60, 9);
    const auto x = modulate_active(X, bank, mask);
    std::vector<double> y(static_cast<std::size_t>(align.beta), 0.0);
    y.insert(y.end(), x.begin(), x.end());
    const auto eq = apply_ascet(demodulate(y, bank, 0, mask), identity_taps(mask, 0));
    double worst = 0.0;
    int checked = 0;
    for (Eigen::Index c = 0; c < eq.symbols.cols(); ++c) {
      const long m = eq.first_symbol + c - align.symbol_delay;
      if (m < 0 || m >= 60) continue;
      ++checked;
      worst = std::max(worst, (eq.symbols.col(c) - X.col(m)).cwiseAbs().maxCoeff());
    }
    CHECK(checked > 40);
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("white noise through the analysis bank has variance sigma^2 ||h||^2") {
  const auto p = make_prototype(16, 2);
  const auto bank = build_bank(p);
  const auto mask = ToneMask::from_indices({5}, 16);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd(0.0, std::sqrt(2.0));
  std::vector<double> y(16 * 100000);
  for (double& v : y) v = nd(rng);
  const auto r = demodulate(y, bank, 0, mask);
  const double var = r.cos.row(0).squaredNorm() / static_cast<double>(r.cos.cols());
  const double expect = 2.0 * bank.analysis_cos.row(5).squaredNorm();
  CHECK(std::abs(var - expect) / expect < 0.03);
}

TEST_CASE("ASCET reductions") {
  const auto bank = build_bank(make_prototype(8, 2));
  const auto mask = ToneMask::from_indices({1, 2}, 8);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  std::vector<double> y(400);
  for (double& v : y) v = nd(rng);
  const auto r = demodulate(y, bank, 0, mask);

  const auto id = apply_ascet(r, identity_taps(mask, 0));
  CHECK((id.symbols - r.cos).cwiseAbs().maxCoeff() == 0.0);

  auto sine = identity_taps(mask, 0);
  sine.c.setZero();
  sine.s.setOnes();
  CHECK((apply_ascet(r, sine).symbols - r.sin).cwiseAbs().maxCoeff() == 0.0);

  // Order 1 with taps only at mu = 0 equals order 0 on the common range.
  auto t1 = identity_taps(mask, 1);
  t1.c(0, 1) = 0.4;
  t1.s(1, 1) = -0.3;
  auto t0 = identity_taps(mask, 0);
  t0.c(0, 0) = 0.4;
  t0.s(1, 0) = -0.3;
  const auto e1 = apply_ascet(r, t1);
  const auto e0 = apply_ascet(r, t0);
  const int shift = e1.first_symbol - e0.first_symbol;
  CHECK(shift == 1);
  CHECK((e1.symbols - e0.symbols.middleCols(shift, e1.symbols.cols())).cwiseAbs().maxCoeff() == 0.0);

  // A general tap set matches the defining sum.
  auto t = identity_taps(mask, 1);
  t.c << 0.1, 0.9, -0.2, 0.3, 1.1, 0.05;
  t.s << -0.4, 0.2, 0.7, 0.0, -0.6, 0.25;
  const auto e = apply_ascet(r, t);
  for (int i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < e.symbols.cols(); ++j) {
      const long m0 = e.first_symbol + j;
      double want = 0.0;
      for (int mu = -1; mu <= 1; ++mu) {
        const long col = m0 - mu - r.first_symbol;
        want += r.cos(i, col) * t.c_at(i, mu) + r.sin(i, col) * t.s_at(i, mu);
      }
      CHECK(std::abs(e.symbols(i, j) - want) < 1e-13);
    }

  auto bad = identity_taps(ToneMask::from_indices({1, 3}, 8), 0);
  CHECK_THROWS_AS(apply_ascet(r, bad), DimensionError);
  CHECK_THROWS_AS(identity_taps(mask, -1), ParameterError);
}

TEST_CASE("measured kernels reproduce the single-symbol experiment") {
  const auto bank = build_bank(make_prototype(8, 2));
  const auto mask = ToneMask::all(8);
  const auto ch = ideal_channel(1.0);
  const auto align = choose_alignment(bank, ch, mask);
  const auto q = measure_kernel(bank, ch, align, mask);
  for (int d = q.min_offset; d <= q.max_offset; ++d) {
    const Eigen::MatrixXd want = d == 0 ? Eigen::MatrixXd(Eigen::MatrixXd::Identity(8, 8)) : Eigen::MatrixXd(Eigen::MatrixXd::Zero(8, 8));
    CHECK((q.cos_at(d) - want).cwiseAbs().maxCoeff() < 1e-10);
  }
  const auto analytic = kernel_q(bank, ch, align, mask);
  for (int d = q.min_offset; d <= q.max_offset; ++d)
    CHECK((q.sin_at(d) - analytic.sin_at(d)).cwiseAbs().maxCoeff() < 1e-12);
}
