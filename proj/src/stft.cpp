// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "stft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "fft.hpp"

namespace rirkit {

std::vector<double> hann_periodic(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
  return w;
}

void StftConfig::validate() const {
  if (win_len <= 0 || hop <= 0 || fft_len <= 0)
    throw_validation("stft config: win_len, hop and fft_len must be positive");
  if (hop > win_len) throw_validation("stft config: hop larger than win_len breaks overlap-add");
  if (fft_len != win_len) throw_validation("stft config: fft_len must equal win_len");
  if (centered && win_len % 2 != 0)
    throw_validation("stft config: centered convention needs an even win_len");
  // Constant overlap-add check: the shifted analysis windows must sum to the
  // same constant at every sample of one hop period.
  const std::vector<double> w = hann_periodic(win_len);
  double lo = 1e300, hi = -1e300;
  for (int n = 0; n < hop; ++n) {
    double s = 0.0;
    for (int k = n; k < win_len; k += hop) s += w[k];
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (hi <= 0.0 || (hi - lo) > 1e-9 * hi)
    throw_validation("stft config: window does not satisfy COLA at this hop");
}

int StftConfig::frames_for(size_t n_samples) const {
  const size_t padded = n_samples + static_cast<size_t>(pad());
  return static_cast<int>((padded + hop - 1) / hop);
}

Spectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  if (w.samples.empty()) throw_validation("stft: empty waveform");
  for (double v : w.samples)
    if (!std::isfinite(v)) throw_validation("stft: non-finite sample");

  const int n_frames = cfg.frames_for(w.samples.size());
  const int F = cfg.bands();
  const int pad = cfg.pad();
  const std::vector<double> win = hann_periodic(cfg.win_len);

  Spectrogram out;
  out.config = cfg;
  out.orig_length = w.samples.size();
  out.bins.resize(F, n_frames);

  std::vector<double> frame(cfg.fft_len);
  std::vector<std::complex<double>> spec(F);
  const long n = static_cast<long>(w.samples.size());
  for (int t = 0; t < n_frames; ++t) {
    const long start = static_cast<long>(t) * cfg.hop - pad;
    for (int i = 0; i < cfg.win_len; ++i) {
      const long idx = start + i;
      frame[i] = (idx >= 0 && idx < n) ? win[i] * w.samples[idx] : 0.0;
    }
    real_fft(frame.data(), cfg.fft_len, spec.data());
    for (int f = 0; f < F; ++f) out.bins(f, t) = spec[f];
  }
  return out;
}

Waveform istft(const Spectrogram& s, int sample_rate) {
  s.config.validate();
  const StftConfig& cfg = s.config;
  if (s.bins.rows() != cfg.bands())
    throw_validation("istft: spectrogram rows inconsistent with fft_len");
  if (s.bins.cols() == 0) throw_validation("istft: no frames");

  const int n_frames = s.frames();
  const int pad = cfg.pad();
  const size_t out_len =
      s.orig_length > 0 ? s.orig_length : static_cast<size_t>(n_frames) * cfg.hop;
  const size_t buf_len = static_cast<size_t>(n_frames - 1) * cfg.hop + cfg.win_len;

  std::vector<double> acc(buf_len, 0.0);
  std::vector<double> wsum(buf_len, 0.0);
  const std::vector<double> win = hann_periodic(cfg.win_len);

  std::vector<std::complex<double>> spec(cfg.bands());
  std::vector<double> frame(cfg.fft_len);
  for (int t = 0; t < n_frames; ++t) {
    for (int f = 0; f < cfg.bands(); ++f) spec[f] = s.bins(f, t);
    real_ifft(spec.data(), cfg.fft_len, frame.data());
    const size_t start = static_cast<size_t>(t) * cfg.hop;
    for (int i = 0; i < cfg.win_len; ++i) {
      acc[start + i] += frame[i];
      wsum[start + i] += win[i];
    }
  }

  // The analysis window is applied once, so plain overlap-add already carries
  // weight wsum == COLA constant in the interior; dividing by wsum also fixes
  // the partly covered edges.
  Waveform out;
  out.sample_rate = sample_rate;
  out.samples.resize(out_len, 0.0);
  for (size_t i = 0; i < out_len; ++i) {
    const size_t p = i + pad;
    if (p < buf_len && wsum[p] > 1e-12) out.samples[i] = acc[p] / wsum[p];
  }
  return out;
}

}  // namespace rirkit
