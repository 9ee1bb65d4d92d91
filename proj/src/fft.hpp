// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstddef>

namespace rirkit {

// Unnormalized forward real FFT: out has n/2 + 1 bins.
void real_fft(const double* in, size_t n, std::complex<double>* out);

// Inverse of real_fft, scaled by 1/n so real_ifft(real_fft(x)) == x.
void real_ifft(const std::complex<double>* in, size_t n, double* out);

size_t next_pow2(size_t n);

}  // namespace rirkit
