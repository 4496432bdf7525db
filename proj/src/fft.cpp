#include "eltmcm/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace eltmcm::fft {
namespace {

enum class Kind { r2c, c2r, fwd, bwd };

struct Buffer {
  explicit Buffer(std::size_t bytes) : ptr(fftw_malloc(std::max<std::size_t>(bytes, 16))) {}
  ~Buffer() { fftw_free(ptr); }
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;
  void* ptr;
};

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// Plans are never destroyed; the set of sizes used by a process is small.
fftw_plan get_plan(Kind kind, std::size_t n) {
  static std::map<std::pair<Kind, std::size_t>, fftw_plan> cache;
  std::lock_guard lock(plan_mutex());
  auto key = std::make_pair(kind, n);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const int ni = static_cast<int>(n);
  Buffer re(sizeof(double) * n);
  Buffer cx(sizeof(fftw_complex) * n);
  fftw_plan plan = nullptr;
  switch (kind) {
    case Kind::r2c:
      plan = fftw_plan_dft_r2c_1d(ni, static_cast<double*>(re.ptr),
                                  static_cast<fftw_complex*>(cx.ptr), FFTW_ESTIMATE);
      break;
    case Kind::c2r:
      plan = fftw_plan_dft_c2r_1d(ni, static_cast<fftw_complex*>(cx.ptr),
                                  static_cast<double*>(re.ptr), FFTW_ESTIMATE);
      break;
    case Kind::fwd:
    case Kind::bwd: {
      Buffer cx2(sizeof(fftw_complex) * n);
      plan = fftw_plan_dft_1d(ni, static_cast<fftw_complex*>(cx.ptr),
                              static_cast<fftw_complex*>(cx2.ptr),
                              kind == Kind::fwd ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
      break;
    }
  }
  cache.emplace(key, plan);
  return plan;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<cplx> rfft(std::span<const double> x, std::size_t n) {
  Buffer in(sizeof(double) * n);
  Buffer out(sizeof(fftw_complex) * (n / 2 + 1));
  auto* pin = static_cast<double*>(in.ptr);
  std::fill(pin, pin + n, 0.0);
  std::copy_n(x.begin(), std::min(n, x.size()), pin);
  fftw_execute_dft_r2c(get_plan(Kind::r2c, n), pin, static_cast<fftw_complex*>(out.ptr));
  const auto* pout = static_cast<const cplx*>(out.ptr);
  return {pout, pout + n / 2 + 1};
}

std::vector<double> irfft(std::span<const cplx> bins, std::size_t n) {
  Buffer in(sizeof(fftw_complex) * (n / 2 + 1));
  Buffer out(sizeof(double) * n);
  auto* pin = static_cast<cplx*>(in.ptr);
  std::fill(pin, pin + n / 2 + 1, cplx{});
  std::copy_n(bins.begin(), std::min(n / 2 + 1, bins.size()), pin);
  fftw_execute_dft_c2r(get_plan(Kind::c2r, n), reinterpret_cast<fftw_complex*>(pin),
                       static_cast<double*>(out.ptr));
  const auto* pout = static_cast<const double*>(out.ptr);
  std::vector<double> y(pout, pout + n);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : y) v *= scale;
  return y;
}

static std::vector<cplx> complex_transform(std::span<const cplx> x, std::size_t n, Kind kind) {
  Buffer in(sizeof(fftw_complex) * n);
  Buffer out(sizeof(fftw_complex) * n);
  auto* pin = static_cast<cplx*>(in.ptr);
  std::fill(pin, pin + n, cplx{});
  std::copy_n(x.begin(), std::min(n, x.size()), pin);
  fftw_execute_dft(get_plan(kind, n), reinterpret_cast<fftw_complex*>(pin),
                   static_cast<fftw_complex*>(out.ptr));
  const auto* pout = static_cast<const cplx*>(out.ptr);
  return {pout, pout + n};
}

std::vector<cplx> dft(std::span<const cplx> x, std::size_t n) {
  return complex_transform(x, n, Kind::fwd);
}

std::vector<cplx> idft(std::span<const cplx> x, std::size_t n) {
  auto y = complex_transform(x, n, Kind::bwd);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : y) v *= scale;
  return y;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t len = a.size() + b.size() - 1;
  if (std::min(a.size(), b.size()) <= 64) {
    std::vector<double> y(len, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double ai = a[i];
      if (ai == 0.0) continue;
      for (std::size_t j = 0; j < b.size(); ++j) y[i + j] += ai * b[j];
    }
    return y;
  }
  const std::size_t n = next_pow2(len);
  auto fa = rfft(a, n);
  const auto fb = rfft(b, n);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  auto y = irfft(fa, n);
  y.resize(len);
  return y;
}

std::vector<cplx> convolve(std::span<const cplx> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t len = a.size() + b.size() - 1;
  const std::size_t n = next_pow2(len);
  auto fa = dft(a, n);
  std::vector<cplx> bc(b.begin(), b.end());
  const auto fb = dft(bc, n);
  for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
  auto y = idft(fa, n);
  y.resize(len);
  return y;
}

}  // namespace eltmcm::fft
