#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace eltmcm {

/// Upper tail of the standard normal distribution.
double q_function(double x);
/// Inverse of q_function on (0, 1): rational approximation plus Newton refinement.
double q_inverse(double p);

/// SNR gap for square QAM at a target symbol error rate: Q^{-1}(ser/4)^2 / 3.
double gap_qam(double ser);
/// SNR gap for PAM: Q^{-1}(ser/2)^2 / 3.
double gap_pam(double ser);

/// C(k) = log2(1 + sinr(k)/gap), optionally clamped to max_bits.
std::vector<double> capacity(std::span<const double> sinr, double gap, std::optional<double> max_bits = std::nullopt);

/// R = spacing * M/(M+GI) * sum C(k).
double throughput(std::span<const double> capacity_bits, double spacing, int num_subcarriers, int guard);

struct RateReport {
  std::vector<int> subcarriers;
  std::vector<double> sinr;
  std::vector<double> capacity;
  double throughput = 0.0;
  double gap = 1.0;
  double ser = 0.0;
  double spacing = 0.0;
  double overhead = 1.0;
};

RateReport rate_report(std::span<const int> subcarriers, std::span<const double> sinr, double gap, double ser,
                       double spacing, int num_subcarriers, int guard, std::optional<double> max_bits = std::nullopt);

/// "k,sinr_db,capacity_bits" rows, then summary rows "total,,<sum C>" and "throughput_bps,,<R>".
void write_rate_csv(std::ostream& os, const RateReport& report);

}  // namespace eltmcm
