// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "common.hpp"

namespace rirkit {

// Shoebox room with one source and one microphone. absorption < 0 derives
// the wall coefficient from rt60_target via Eyring's formula, retuned so the
// Schroeder-fit reverberation time of the render matches the target; a value
// in (0, 1] overrides it (1 = fully absorbing walls, direct path only).
// max_order < 0 caps reflections where image energy falls 60 dB below the
// direct path.
struct RoomSpec {
  std::array<double, 3> dims{6.0, 5.0, 3.0};
  double rt60_target = 0.5;
  std::array<double, 3> source_pos{2.0, 2.5, 1.5};
  std::array<double, 3> mic_pos{4.0, 2.5, 1.5};
  int sample_rate = 16000;
  int max_order = -1;
  double absorption = -1.0;

  void validate() const;
  double distance() const;
};

struct SamplingRegime {
  std::array<std::pair<double, double>, 3> dim_ranges;
  std::pair<double, double> rt60_range;
  std::pair<double, double> distance_range;
  int mics_per_room = 16;

  static SamplingRegime matched();
  static SamplingRegime mismatched();
  void validate() const;
};

// One sampled room: shared geometry and reverberation time, one source,
// mics_per_room microphone positions.
struct RoomDraw {
  std::array<double, 3> dims;
  double rt60;
  std::array<double, 3> source;
  std::vector<std::array<double, 3>> mics;
};

// Uniform rejection sampling honoring the 0.5 m wall clearance and the
// source-mic distance range; deterministic per seed; fails after a bounded
// number of rejected draws when the constraints are infeasible.
RoomDraw sample_room_draw(const SamplingRegime& regime, uint64_t seed);
RoomSpec sample_room(const SamplingRegime& regime, uint64_t seed);
RoomSpec spec_for_mic(const RoomDraw& draw, int mic, int sample_rate = 16000);

// Frequency-independent wall reflection coefficient hitting rt60 in the
// given room, from Eyring's absorption inversion.
double eyring_reflection(const std::array<double, 3>& dims, double rt60);

// Shoebox image-source RIR with windowed-sinc fractional delays; length
// covers 1.25 * rt60_target plus the interpolation kernel.
Waveform synth_rir_ism(const RoomSpec& spec);

// Statistical RIR: unit impulse followed by white Gaussian noise under the
// exp(-ln(1000) n / (fs rt60)) amplitude envelope.
Waveform synth_rir_polack(double rt60, double duration, int sample_rate, uint64_t seed);

// Drop everything before the direct-path peak (first local maximum of |h|
// at or above half the global maximum) and rescale so that sample 0 is
// exactly 1.
Waveform align_direct_path(const Waveform& h);

// Full linear convolution, length len(x) + len(h) - 1, via FFT.
Waveform convolve(const Waveform& x, const Waveform& h);

}  // namespace rirkit
