// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "common.hpp"

namespace rirkit {

enum class Window { hann };

// Analysis/synthesis configuration. The defaults (512-sample periodic Hann,
// 50 % overlap, first window centered on sample 0) are the convention the
// convolutive-model identities in ctf/rir_spec assume; change them only as a
// matched set.
struct StftConfig {
  int win_len = 512;
  int hop = 256;
  Window window = Window::hann;
  int fft_len = 512;
  // When set, win_len/2 zeros are prepended so frame 0's window peak sits on
  // sample 0. The (-1)^f sign pattern of the RIR-spectrogram identity is only
  // valid under this origin convention.
  bool centered = true;

  void validate() const;
  int pad() const { return centered ? win_len / 2 : 0; }
  int bands() const { return fft_len / 2 + 1; }
  int frames_for(size_t n_samples) const;

  bool operator==(const StftConfig&) const = default;
};

// One-sided complex STFT, F = fft_len/2 + 1 rows by T frames.
struct Spectrogram {
  Eigen::MatrixXcd bins;
  StftConfig config;
  // Original waveform length in samples; 0 for matrices not produced by
  // stft() (istft then reconstructs frames*hop samples).
  size_t orig_length = 0;

  int bands() const { return static_cast<int>(bins.rows()); }
  int frames() const { return static_cast<int>(bins.cols()); }
};

// Periodic (DFT-even) Hann; satisfies constant overlap-add at win/2, win/4, ...
std::vector<double> hann_periodic(int n);

Spectrogram stft(const Waveform& w, const StftConfig& cfg = {});
Waveform istft(const Spectrogram& s, int sample_rate = 16000);

}  // namespace rirkit
