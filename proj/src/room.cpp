// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "room.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <vector>

#include "decay.hpp"
#include "fft.hpp"
#include "rng.hpp"

namespace rirkit {

void RoomSpec::validate() const {
  for (double d : dims) {
    if (!(d > 0.0) || !std::isfinite(d)) throw_validation("room dimensions must be positive");
  }
  if (!(rt60_target > 0.0) || !std::isfinite(rt60_target)) {
    throw_validation("rt60_target must be positive");
  }
  if (sample_rate <= 0) throw_validation("sample_rate must be positive");
  for (int i = 0; i < 3; ++i) {
    if (source_pos[i] < 0.5 || source_pos[i] > dims[i] - 0.5 || mic_pos[i] < 0.5 ||
        mic_pos[i] > dims[i] - 0.5) {
      throw_validation("source and mic need 0.5 m clearance from every wall");
    }
  }
  if (absorption >= 0.0 && !(absorption > 0.0 && absorption <= 1.0)) {
    throw_validation("absorption override must lie in (0, 1]");
  }
}

double RoomSpec::distance() const {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = source_pos[i] - mic_pos[i];
    s += d * d;
  }
  return std::sqrt(s);
}

SamplingRegime SamplingRegime::matched() {
  SamplingRegime r;
  r.dim_ranges = {{{5.0, 10.0}, {5.0, 10.0}, {2.5, 4.0}}};
  r.rt60_range = {0.2, 1.0};
  r.distance_range = {0.75, 2.5};
  r.mics_per_room = 16;
  return r;
}

SamplingRegime SamplingRegime::mismatched() {
  SamplingRegime r;
  r.dim_ranges = {{{10.0, 15.0}, {10.0, 15.0}, {4.0, 6.0}}};
  r.rt60_range = {1.0, 1.5};
  r.distance_range = {2.5, 4.0};
  r.mics_per_room = 16;
  return r;
}

void SamplingRegime::validate() const {
  for (const auto& [lo, hi] : dim_ranges) {
    if (!(lo > 1.0) || !(hi >= lo)) throw_validation("bad dimension range");
  }
  if (!(rt60_range.first > 0.0) || !(rt60_range.second >= rt60_range.first)) {
    throw_validation("bad rt60 range");
  }
  if (!(distance_range.first > 0.0) || !(distance_range.second >= distance_range.first)) {
    throw_validation("bad distance range");
  }
  if (mics_per_room < 1) throw_validation("mics_per_room must be >= 1");
}

RoomDraw sample_room_draw(const SamplingRegime& regime, uint64_t seed) {
  regime.validate();
  Rng rng(seed);
  RoomDraw draw;
  for (int i = 0; i < 3; ++i) {
    draw.dims[i] = rng.uniform(regime.dim_ranges[i].first, regime.dim_ranges[i].second);
  }
  draw.rt60 = rng.uniform(regime.rt60_range.first, regime.rt60_range.second);
  for (int i = 0; i < 3; ++i) {
    draw.source[i] = rng.uniform(0.5, draw.dims[i] - 0.5);
  }
  const auto [dmin, dmax] = regime.distance_range;
  constexpr int kBudget = 100000;
  int attempts = 0;
  while (static_cast<int>(draw.mics.size()) < regime.mics_per_room) {
    if (++attempts > kBudget) {
      throw_validation("cannot place microphones: distance range infeasible for this room");
    }
    std::array<double, 3> mic;
    double d2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      mic[i] = rng.uniform(0.5, draw.dims[i] - 0.5);
      const double d = mic[i] - draw.source[i];
      d2 += d * d;
    }
    const double d = std::sqrt(d2);
    if (d >= dmin && d <= dmax) draw.mics.push_back(mic);
  }
  return draw;
}

RoomSpec spec_for_mic(const RoomDraw& draw, int mic, int sample_rate) {
  if (mic < 0 || mic >= static_cast<int>(draw.mics.size())) {
    throw_validation("mic index out of range");
  }
  RoomSpec spec;
  spec.dims = draw.dims;
  spec.rt60_target = draw.rt60;
  spec.source_pos = draw.source;
  spec.mic_pos = draw.mics[static_cast<size_t>(mic)];
  spec.sample_rate = sample_rate;
  spec.validate();
  return spec;
}

RoomSpec sample_room(const SamplingRegime& regime, uint64_t seed) {
  return spec_for_mic(sample_room_draw(regime, seed), 0);
}

double eyring_reflection(const std::array<double, 3>& dims, double rt60) {
  const double V = dims[0] * dims[1] * dims[2];
  const double S =
      2.0 * (dims[0] * dims[1] + dims[0] * dims[2] + dims[1] * dims[2]);
  const double alpha =
      1.0 - std::exp(-24.0 * std::numbers::ln10 * V / (kSpeedOfSound * S * rt60));
  if (!(alpha > 0.0 && alpha < 1.0)) throw_validation("rt60 unreachable for this geometry");
  return std::sqrt(1.0 - alpha);
}

namespace {

// Hann-windowed sinc interpolation kernels tabulated over quantized
// fractional delays; row q holds the kernel for frac = q / kFracSteps.
class SincTable {
 public:
  SincTable(int taps, int steps) : taps_(taps), steps_(steps), data_(static_cast<size_t>(taps) * (steps + 1)) {
    for (int q = 0; q <= steps; ++q) {
      const double frac = static_cast<double>(q) / steps;
      double* row = &data_[static_cast<size_t>(q) * taps_];
      for (int n = 0; n < taps_; ++n) {
        const double t = n + 1 - frac;
        const double window =
            0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * (t / taps_ - 0.5)));
        const double x = std::numbers::pi * (t - taps_ / 2.0);
        row[n] = window * (std::abs(x) < 1e-12 ? 1.0 : std::sin(x) / x);
      }
    }
  }

  const double* row(double frac) const {
    int q = static_cast<int>(frac * steps_ + 0.5);
    q = std::clamp(q, 0, steps_);
    return &data_[static_cast<size_t>(q) * taps_];
  }

 private:
  int taps_;
  int steps_;
  std::vector<double> data_;
};

}  // namespace

namespace {

Waveform render_ism(const RoomSpec& spec, double beta) {
  const double fs = spec.sample_rate;
  const double cTs = kSpeedOfSound / fs;  // meters per sample
  const int taps = 2 * static_cast<int>(std::lround(0.004 * fs));
  const double direct_delay = spec.distance() / cTs;
  const size_t nsamples =
      std::max(static_cast<size_t>(std::ceil(1.25 * spec.rt60_target * fs)),
               static_cast<size_t>(direct_delay) + static_cast<size_t>(taps) + 1);

  // Farther images land outside the impulse response; the per-axis counts
  // bound the search box and the radius prunes its corners.
  const double max_dist = static_cast<double>(nsamples);  // in samples
  std::array<int, 3> n_img;
  for (int i = 0; i < 3; ++i) {
    n_img[i] = static_cast<int>(std::ceil(max_dist * cTs / (2.0 * spec.dims[i])));
  }

  const int max_exp = 2 * (n_img[0] + n_img[1] + n_img[2]) + 3;
  std::vector<double> beta_pow(static_cast<size_t>(max_exp) + 1);
  beta_pow[0] = 1.0;
  for (int k = 1; k <= max_exp; ++k) beta_pow[static_cast<size_t>(k)] = beta_pow[static_cast<size_t>(k - 1)] * beta;

  // Default reflection-order cap keeps every discarded image at least 60 dB
  // below the direct path.
  int order_cap;
  if (spec.max_order >= 0) {
    order_cap = spec.max_order;
  } else if (beta <= 0.0) {
    order_cap = 0;
  } else {
    const double k60 = std::ceil(3.0 / -std::log10(beta));
    order_cap = k60 < static_cast<double>(max_exp) ? static_cast<int>(k60) : max_exp;
  }

  constexpr int kTableSteps = 4096;
  constexpr int kDefaultTaps = 128;  // 0.004 * 16 kHz * 2
  static const SincTable shared_table(kDefaultTaps, kTableSteps);
  std::unique_ptr<SincTable> local;
  const SincTable* kernel = &shared_table;
  if (taps != kDefaultTaps) {
    local = std::make_unique<SincTable>(taps, kTableSteps);
    kernel = local.get();
  }

  Waveform out;
  out.sample_rate = spec.sample_rate;
  out.samples.assign(nsamples, 0.0);

  const std::array<double, 3>& L = spec.dims;
  const std::array<double, 3>& s = spec.source_pos;
  const std::array<double, 3>& r = spec.mic_pos;

  for (int mx = -n_img[0]; mx <= n_img[0]; ++mx) {
    for (int qx = 0; qx <= 1; ++qx) {
      const double dx = (1 - 2 * qx) * s[0] - r[0] + 2.0 * mx * L[0];
      const int ex = std::abs(mx - qx) + std::abs(mx);
      const double dx2 = dx * dx;
      for (int my = -n_img[1]; my <= n_img[1]; ++my) {
        for (int qy = 0; qy <= 1; ++qy) {
          const double dy = (1 - 2 * qy) * s[1] - r[1] + 2.0 * my * L[1];
          const int exy = ex + std::abs(my - qy) + std::abs(my);
          const double dxy2 = dx2 + dy * dy;
          if (dxy2 > max_dist * cTs * max_dist * cTs) continue;
          for (int mz = -n_img[2]; mz <= n_img[2]; ++mz) {
            for (int qz = 0; qz <= 1; ++qz) {
              const double dz = (1 - 2 * qz) * s[2] - r[2] + 2.0 * mz * L[2];
              const int exyz = exy + std::abs(mz - qz) + std::abs(mz);
              if (exyz > order_cap) continue;
              const double refl = beta_pow[static_cast<size_t>(exyz)];
              if (refl == 0.0) continue;
              const double dist_m = std::sqrt(dxy2 + dz * dz);
              const double dist = dist_m / cTs;  // samples
              if (dist >= max_dist) continue;
              const double gain =
                  refl / (4.0 * std::numbers::pi * std::max(dist_m, cTs));
              const long fdist = static_cast<long>(std::floor(dist));
              const double* lpi = kernel->row(dist - static_cast<double>(fdist));
              const long start = fdist - taps / 2 + 1;
              const long n0 = std::max(0L, -start);
              const long n1 = std::min(static_cast<long>(taps),
                                       static_cast<long>(nsamples) - start);
              for (long n = n0; n < n1; ++n) {
                out.samples[static_cast<size_t>(start + n)] += gain * lpi[n];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

Waveform synth_rir_ism(const RoomSpec& spec) {
  spec.validate();
  if (spec.absorption >= 0.0) {
    return render_ism(spec, std::sqrt(1.0 - spec.absorption));
  }
  // Specular image fields decay slower than the diffuse-field prediction, so
  // an open-loop inversion overshoots the reverberation time. Retune the
  // Eyring input against the Schroeder fit of the rendered response until the
  // measurement lands on the target.
  double rt_in = spec.rt60_target;
  Waveform h = render_ism(spec, eyring_reflection(spec.dims, rt_in));
  for (int iter = 0; iter < 4; ++iter) {
    double measured;
    try {
      measured = rt60_from_edc(edc_time(h), spec.sample_rate);
    } catch (const Error&) {
      break;  // decay not measurable at this length; keep the open-loop render
    }
    const double ratio = measured / spec.rt60_target;
    if (std::abs(ratio - 1.0) <= 0.04) break;
    rt_in /= ratio;
    h = render_ism(spec, eyring_reflection(spec.dims, rt_in));
  }
  return h;
}

Waveform synth_rir_polack(double rt60, double duration, int sample_rate, uint64_t seed) {
  if (!(rt60 > 0.0) || !std::isfinite(rt60)) throw_validation("rt60 must be positive");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw_validation("duration must be positive");
  if (sample_rate <= 0) throw_validation("sample_rate must be positive");
  const size_t n = static_cast<size_t>(std::lround(duration * sample_rate));
  if (n < 2) throw_validation("duration too short");
  Rng rng(seed);
  Waveform out;
  out.sample_rate = sample_rate;
  out.samples.resize(n);
  out.samples[0] = 1.0;
  const double decay = std::log(1000.0) / (sample_rate * rt60);
  constexpr double kNoiseScale = 0.1;
  for (size_t i = 1; i < n; ++i) {
    out.samples[i] = kNoiseScale * rng.gaussian() * std::exp(-decay * static_cast<double>(i));
  }
  return out;
}

Waveform align_direct_path(const Waveform& h) {
  if (h.size() == 0) throw_validation("empty waveform");
  double peak = 0.0;
  for (double v : h.samples) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) throw_validation("zero waveform");
  const double threshold = 0.5 * peak;
  const size_t n = h.size();
  size_t direct = n;
  for (size_t i = 0; i < n; ++i) {
    const double a = std::abs(h.samples[i]);
    if (a < threshold) continue;
    const double prev = i > 0 ? std::abs(h.samples[i - 1]) : 0.0;
    const double next = i + 1 < n ? std::abs(h.samples[i + 1]) : 0.0;
    if (a >= prev && a >= next) {
      direct = i;
      break;
    }
  }
  if (direct == n) throw_numeric("no direct-path peak found");
  Waveform out;
  out.sample_rate = h.sample_rate;
  const double scale = h.samples[direct];
  out.samples.resize(n - direct);
  for (size_t i = direct; i < n; ++i) out.samples[i - direct] = h.samples[i] / scale;
  return out;
}

Waveform convolve(const Waveform& x, const Waveform& h) {
  if (x.size() == 0 || h.size() == 0) throw_validation("empty waveform");
  if (x.sample_rate != h.sample_rate) throw_validation("sample rate mismatch");
  const size_t out_len = x.size() + h.size() - 1;
  const size_t n = next_pow2(out_len);
  const size_t nb = n / 2 + 1;
  std::vector<double> xa(n, 0.0), ha(n, 0.0);
  std::copy(x.samples.begin(), x.samples.end(), xa.begin());
  std::copy(h.samples.begin(), h.samples.end(), ha.begin());
  std::vector<std::complex<double>> X(nb), H(nb);
  real_fft(xa.data(), n, X.data());
  real_fft(ha.data(), n, H.data());
  for (size_t k = 0; k < nb; ++k) X[k] *= H[k];
  std::vector<double> full(n);
  real_ifft(X.data(), n, full.data());
  Waveform out;
  out.sample_rate = x.sample_rate;
  out.samples.assign(full.begin(), full.begin() + static_cast<long>(out_len));
  return out;
}

}  // namespace rirkit
