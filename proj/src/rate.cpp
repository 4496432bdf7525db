#include "eltmcm/rate.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

#include "eltmcm/error.hpp"

namespace eltmcm {

namespace {

// Acklam's rational approximation of the standard normal quantile (relative error ~1e-9).
double normal_quantile(double p) {
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                           1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                           6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                           -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                           3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

void check_ser(double ser) {
  if (!(ser > 0.0 && ser < 1.0)) throw ParameterError("ser", "must lie in (0, 1)");
}

}  // namespace

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double q_inverse(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("p", "must lie in (0, 1)");
  double x = -normal_quantile(p);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (int i = 0; i < 3; ++i) {
    const double density = inv_sqrt_2pi * std::exp(-0.5 * x * x);
    if (density == 0.0) break;
    x += (q_function(x) - p) / density;
  }
  return x;
}

double gap_qam(double ser) {
  check_ser(ser);
  const double q = q_inverse(ser / 4.0);
  return q * q / 3.0;
}

double gap_pam(double ser) {
  check_ser(ser);
  const double q = q_inverse(ser / 2.0);
  return q * q / 3.0;
}

std::vector<double> capacity(std::span<const double> sinr, double gap, std::optional<double> max_bits) {
  if (!(gap > 0.0)) throw ParameterError("gap", "must be positive");
  if (max_bits && !(*max_bits >= 0.0)) throw ParameterError("max_bits", "must be >= 0");
  std::vector<double> out(sinr.size());
  for (std::size_t i = 0; i < sinr.size(); ++i) {
    if (!(sinr[i] >= 0.0)) throw ParameterError("sinr", "negative or NaN SINR at index " + std::to_string(i));
    out[i] = std::log2(1.0 + sinr[i] / gap);
    if (max_bits) out[i] = std::min(out[i], *max_bits);
  }
  return out;
}

double throughput(std::span<const double> capacity_bits, double spacing, int num_subcarriers, int guard) {
  if (num_subcarriers <= 0) throw ParameterError("num_subcarriers", "must be positive");
  if (guard < 0) throw ParameterError("guard", "must be >= 0");
  if (!(spacing >= 0.0) || !std::isfinite(spacing)) throw ParameterError("spacing", "must be finite and >= 0");
  double sum = 0.0;
  for (double c : capacity_bits) sum += c;
  const double overhead = static_cast<double>(num_subcarriers) / (num_subcarriers + guard);
  return spacing * overhead * sum;
}

RateReport rate_report(std::span<const int> subcarriers, std::span<const double> sinr, double gap, double ser,
                       double spacing, int num_subcarriers, int guard, std::optional<double> max_bits) {
  if (subcarriers.size() != sinr.size()) throw DimensionError("one SINR value per subcarrier required");
  RateReport r;
  r.subcarriers.assign(subcarriers.begin(), subcarriers.end());
  r.sinr.assign(sinr.begin(), sinr.end());
  r.capacity = capacity(sinr, gap, max_bits);
  r.gap = gap;
  r.ser = ser;
  r.spacing = spacing;
  r.throughput = throughput(r.capacity, spacing, num_subcarriers, guard);
  r.overhead = static_cast<double>(num_subcarriers) / (num_subcarriers + guard);
  return r;
}

void write_rate_csv(std::ostream& os, const RateReport& report) {
  os << "k,sinr_db,capacity_bits\n" << std::setprecision(17);
  double total = 0.0;
  for (std::size_t i = 0; i < report.capacity.size(); ++i) {
    os << report.subcarriers[i] << ',' << 10.0 * std::log10(report.sinr[i]) << ',' << report.capacity[i] << '\n';
    total += report.capacity[i];
  }
  // Summary rows: total bits per multicarrier symbol, then throughput in bit/s.
  os << "total,," << total << '\n';
  os << "throughput_bps,," << report.throughput << '\n';
}

}  // namespace eltmcm
