#pragma once

// Thin FFTW wrapper. Plans are created with FFTW_ESTIMATE so that results are
// bit-reproducible from run to run.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace eltmcm::fft {

using cplx = std::complex<double>;

/// Forward DFT of a real sequence zero-padded to `n`; returns bins 0..n/2.
std::vector<cplx> rfft(std::span<const double> x, std::size_t n);

/// Inverse of rfft: `bins` holds n/2+1 entries. Output is scaled by 1/n.
std::vector<double> irfft(std::span<const cplx> bins, std::size_t n);

/// Complex forward DFT (no scaling) of `x` zero-padded to `n`.
std::vector<cplx> dft(std::span<const cplx> x, std::size_t n);

/// Complex inverse DFT, scaled by 1/n.
std::vector<cplx> idft(std::span<const cplx> x, std::size_t n);

/// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

/// Full linear convolution, computed directly for short inputs and by FFT otherwise.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

/// Full linear convolution of a complex and a real sequence.
std::vector<cplx> convolve(std::span<const cplx> a, std::span<const double> b);

}  // namespace eltmcm::fft
