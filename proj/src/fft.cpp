// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

#include "common.hpp"

namespace rirkit {

namespace {

// FFTW's planner is not reentrant; plans are cached per size and reused with
// the new-array execute interface (FFTW_UNALIGNED makes any buffer valid).
std::mutex g_planner_mutex;

fftw_plan r2c_plan(size_t n) {
  static std::map<size_t, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(g_planner_mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> in(n);
  std::vector<fftw_complex> out(n / 2 + 1);
  fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!p) throw_numeric("fftw r2c plan failed for n=" + std::to_string(n));
  cache.emplace(n, p);
  return p;
}

fftw_plan c2r_plan(size_t n) {
  static std::map<size_t, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(g_planner_mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<fftw_complex> in(n / 2 + 1);
  std::vector<double> out(n);
  fftw_plan p = fftw_plan_dft_c2r_1d(static_cast<int>(n), in.data(), out.data(),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!p) throw_numeric("fftw c2r plan failed for n=" + std::to_string(n));
  cache.emplace(n, p);
  return p;
}

}  // namespace

void real_fft(const double* in, size_t n, std::complex<double>* out) {
  if (n == 0) throw_validation("real_fft: empty input");
  fftw_plan p = r2c_plan(n);
  std::vector<double> buf(in, in + n);
  fftw_execute_dft_r2c(p, buf.data(), reinterpret_cast<fftw_complex*>(out));
}

void real_ifft(const std::complex<double>* in, size_t n, double* out) {
  if (n == 0) throw_validation("real_ifft: empty input");
  fftw_plan p = c2r_plan(n);
  // c2r destroys its input, so run it on a scratch copy.
  std::vector<std::complex<double>> buf(in, in + n / 2 + 1);
  fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(buf.data()), out);
  const double scale = 1.0 / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) out[i] *= scale;
}

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace rirkit
