#include "eltmcm/prototype.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "eltmcm/error.hpp"
#include "eltmcm/filterbank.hpp"
#include "eltmcm/sinr.hpp"

namespace eltmcm {

namespace detail {

void validate_geometry(int num_subbands, int overlap) {
  if (num_subbands < 4 || (num_subbands & (num_subbands - 1)) != 0)
    throw ParameterError("num_subbands", "must be a power of two >= 4, got " +
                                             std::to_string(num_subbands));
  if (overlap != 2 && overlap != 3)
    throw ParameterError("overlap", "must be 2 or 3, got " + std::to_string(overlap));
}

std::vector<double> lattice_taps(const std::vector<double>& angles) {
  const std::size_t kappa = angles.size();
  std::vector<double> g0(kappa, 0.0), g1(kappa, 0.0);
  g0[0] = std::cos(angles[0]);
  g1[0] = std::sin(angles[0]);
  for (std::size_t stage = 1; stage < kappa; ++stage) {
    for (std::size_t j = stage; j > 0; --j) g1[j] = g1[j - 1];
    g1[0] = 0.0;
    const double c = std::cos(angles[stage]);
    const double s = std::sin(angles[stage]);
    for (std::size_t j = 0; j <= stage; ++j) {
      const double a = g0[j];
      const double b = g1[j];
      g0[j] = c * a - s * b;
      g1[j] = s * a + c * b;
    }
  }
  std::vector<double> out(g0);
  out.insert(out.end(), g1.begin(), g1.end());
  return out;
}

}  // namespace detail

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> malvar_window(int M) {
  const int len = 4 * M;
  std::vector<double> p(static_cast<std::size_t>(len));
  for (int n = 0; n < len; ++n)
    p[n] = 1.0 / (2.0 * std::numbers::sqrt2) - 0.5 * std::cos((n + 0.5) * kPi / (2.0 * M));
  return p;
}

// Frequency-sampling window with kappa-1 interior samples of the transition band.
std::vector<double> frequency_sampling_target(int M, int kappa) {
  static const std::array<double, 3> k3{1.0, 0.911438, 0.411438};
  const int len = 2 * kappa * M;
  std::vector<double> t(static_cast<std::size_t>(len));
  for (int n = 0; n < len; ++n) {
    double v = k3[0];
    for (int i = 1; i < kappa; ++i)
      v += 2.0 * ((i % 2) ? -1.0 : 1.0) * k3[i] *
           std::cos(2.0 * kPi * i * (n + 0.5) / static_cast<double>(len));
    t[n] = v;
  }
  return t;
}

double residual_norm2(const std::vector<double>& angles, const std::vector<double>& target) {
  const auto taps = detail::lattice_taps(angles);
  double acc = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) acc += (taps[i] - target[i]) * (taps[i] - target[i]);
  return acc;
}

// Levenberg-Marquardt fit of lattice angles to a 2*kappa target.
std::vector<double> fit_angles(std::vector<double> angles, const std::vector<double>& target) {
  const int np = static_cast<int>(angles.size());
  const int nr = static_cast<int>(target.size());
  double lambda = 1e-3;
  double cost = residual_norm2(angles, target);
  for (int iter = 0; iter < 200; ++iter) {
    const auto base = detail::lattice_taps(angles);
    Eigen::MatrixXd J(nr, np);
    Eigen::VectorXd r(nr);
    for (int i = 0; i < nr; ++i) r(i) = base[i] - target[i];
    for (int j = 0; j < np; ++j) {
      auto plus = angles, minus = angles;
      plus[j] += 1e-7;
      minus[j] -= 1e-7;
      const auto tp = detail::lattice_taps(plus);
      const auto tm = detail::lattice_taps(minus);
      for (int i = 0; i < nr; ++i) J(i, j) = (tp[i] - tm[i]) / 2e-7;
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    if (g.norm() < 1e-14) break;
    bool improved = false;
    for (int tries = 0; tries < 20; ++tries) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal().array() += lambda * (1.0 + JtJ.diagonal().array());
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      auto candidate = angles;
      for (int j = 0; j < np; ++j) candidate[j] += step(j);
      const double c = residual_norm2(candidate, target);
      if (c < cost) {
        angles = candidate;
        const double gain = cost - c;
        cost = c;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (gain < 1e-18) iter = 1 << 20;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return angles;
}

std::vector<double> projected_window(int M, int kappa) {
  const auto target = frequency_sampling_target(M, kappa);
  const int len = 2 * kappa * M;
  std::vector<double> p(static_cast<std::size_t>(len), 0.0);
  std::vector<double> previous;
  for (int k = 0; k < M / 2; ++k) {
    std::vector<double> t(2 * kappa);
    for (int j = 0; j < kappa; ++j) {
      t[j] = target[k + 2 * M * j];
      t[kappa + j] = target[k + M + 2 * M * j];
    }
    double norm = 0.0;
    for (double v : t) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : t) v /= norm;

    // Deterministic multi-start: the previous pair's solution plus a fixed grid.
    std::vector<std::vector<double>> starts;
    if (!previous.empty()) starts.push_back(previous);
    const std::array<double, 3> grid{-2.0, 0.0, 2.0};
    std::vector<int> idx(kappa, 0);
    while (true) {
      std::vector<double> s(kappa);
      for (int j = 0; j < kappa; ++j) s[j] = grid[idx[j]] + 0.1 * (j + 1);
      starts.push_back(s);
      int d = 0;
      while (d < kappa && ++idx[d] == 3) idx[d++] = 0;
      if (d == kappa) break;
    }
    std::vector<double> best;
    double best_cost = 0.0;
    for (const auto& s : starts) {
      auto a = fit_angles(s, t);
      const double c = residual_norm2(a, t);
      if (best.empty() || c < best_cost - 1e-15) {
        best = a;
        best_cost = c;
      }
    }
    previous = best;
    const auto taps = detail::lattice_taps(best);
    for (int j = 0; j < kappa; ++j) {
      p[k + 2 * M * j] = taps[j];
      p[k + M + 2 * M * j] = taps[kappa + j];
    }
  }
  // Mirror onto the second half of each polyphase family.
  for (int k = 0; k < M / 2; ++k)
    for (int j = 0; j < kappa; ++j) {
      p[len - 1 - (k + 2 * M * j)] = p[k + 2 * M * j];
      p[len - 1 - (k + M + 2 * M * j)] = p[k + M + 2 * M * j];
    }
  return p;
}

}  // namespace

PrototypeFilter make_prototype(int num_subbands, int overlap) {
  detail::validate_geometry(num_subbands, overlap);
  PrototypeFilter p;
  p.num_subbands = num_subbands;
  p.overlap = overlap;
  p.coeffs = overlap == 2 ? malvar_window(num_subbands) : projected_window(num_subbands, overlap);
  const double residual = check_pr(p);
  if (!(residual < kPrTolerance))
    throw Error("prototype construction missed perfect reconstruction (residual " +
                std::to_string(residual) + ")");
  p.certified = true;
  return p;
}

double check_pr(const PrototypeFilter& prototype) {
  if (prototype.num_subbands <= 0 || prototype.overlap <= 0 ||
      prototype.coeffs.size() != static_cast<std::size_t>(2 * prototype.overlap * prototype.num_subbands))
    throw DimensionError("prototype length must equal 2*overlap*num_subbands");
  const int M = prototype.num_subbands;
  const auto bank = build_bank(prototype);
  const auto mask = ToneMask::all(M);
  const auto ideal = ideal_channel(1.0);
  const auto align = choose_alignment(bank, ideal, mask);
  const auto table = kernel_q(bank, ideal, align, mask);
  double worst = 0.0;
  for (int off = table.min_offset; off <= table.max_offset; ++off) {
    const auto& q = table.cos_at(off);
    for (int i = 0; i < q.rows(); ++i)
      for (int j = 0; j < q.cols(); ++j) {
        const double expected = (i == j && off == 0) ? 1.0 : 0.0;
        worst = std::max(worst, std::abs(q(i, j) - expected));
      }
  }
  // A window that never aligns has no entries at all near the expected peak.
  if (0 < table.min_offset || 0 > table.max_offset) worst = std::max(worst, 1.0);
  return worst;
}

PrototypeFilter import_prototype(int num_subbands, int overlap, std::vector<double> coeffs) {
  if (num_subbands < 1) throw ParameterError("num_subbands", "must be positive");
  if (overlap < 1) throw ParameterError("overlap", "must be positive");
  if (coeffs.size() != static_cast<std::size_t>(2 * overlap * num_subbands))
    throw DimensionError("expected " + std::to_string(2 * overlap * num_subbands) +
                         " coefficients, got " + std::to_string(coeffs.size()));
  PrototypeFilter p;
  p.num_subbands = num_subbands;
  p.overlap = overlap;
  p.coeffs = std::move(coeffs);
  p.certified = check_pr(p) < kPrTolerance;
  return p;
}

void write_prototype(std::ostream& os, const PrototypeFilter& prototype) {
  os << prototype.num_subbands << ' ' << prototype.overlap << '\n';
  os << std::setprecision(17);
  for (double c : prototype.coeffs) os << c << '\n';
}

PrototypeFilter read_prototype(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("prototype file is empty");
  std::istringstream header(line);
  int M = 0, kappa = 0;
  if (!(header >> M >> kappa)) throw IoError("prototype header must be 'M kappa'");
  std::vector<double> coeffs;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      coeffs.push_back(std::stod(line, &used));
    } catch (const std::exception&) {
      throw IoError("malformed coefficient line: '" + line + "'");
    }
  }
  return import_prototype(M, kappa, std::move(coeffs));
}

}  // namespace eltmcm
