#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace eltmcm {

/// Prototype window p[n] of an extended lapped transform with M subbands and
/// overlap factor kappa. The window spans 2*kappa*M samples.
struct PrototypeFilter {
  std::vector<double> coeffs;
  int num_subbands = 0;
  int overlap = 0;
  /// True when the window passed the perfect-reconstruction check (residual < 1e-10).
  bool certified = false;

  std::size_t length() const noexcept { return coeffs.size(); }
  /// Last filter index N; the support is 0..N.
  int order() const noexcept { return static_cast<int>(coeffs.size()) - 1; }
};

inline constexpr double kPrTolerance = 1e-10;

/// Builds a certified perfect-reconstruction window.
///
/// kappa = 2 uses Malvar's closed-form ELT window. kappa = 3 projects a
/// frequency-sampling window onto the lattice (butterfly) parameterisation of
/// paraunitary cosine-modulated banks, which is PR for any choice of angles.
/// Throws ParameterError for M not a power of two >= 4 or kappa outside {2, 3}.
PrototypeFilter make_prototype(int num_subbands, int overlap);

/// Worst-case deviation of the ideal-channel transmultiplexer response from a
/// pure delay, over every subcarrier pair and symbol offset.
double check_pr(const PrototypeFilter& prototype);

/// Wraps externally supplied coefficients. The result is flagged certified
/// only if check_pr passes.
PrototypeFilter import_prototype(int num_subbands, int overlap, std::vector<double> coeffs);

/// Text format: first line "M kappa", then one coefficient per line (17 significant digits).
void write_prototype(std::ostream& os, const PrototypeFilter& prototype);
PrototypeFilter read_prototype(std::istream& is);

namespace detail {
/// Polyphase lattice: returns the 2*kappa taps (first the kappa taps of G_k,
/// then those of G_{M+k}) generated by the rotation angles.
std::vector<double> lattice_taps(const std::vector<double>& angles);
void validate_geometry(int num_subbands, int overlap);
}  // namespace detail

}  // namespace eltmcm
