// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>
#include <filesystem>

#include "ctf.hpp"

namespace rirkit {

enum class RirSource { from_dry_oracle, from_estimate };

// STFT-domain estimate of a room impulse response, recovered from a
// crossband filter bank. flagged carries the bank's rank-deficiency marks.
struct RirSpectrogramEstimate {
  Eigen::MatrixXcd bins;  // F x T_h
  std::vector<uint8_t> flagged;
  bool corrected = false;
  RirSource source = RirSource::from_estimate;
  StftConfig stft_config;

  int bands() const { return static_cast<int>(bins.rows()); }
  int frames() const { return static_cast<int>(bins.cols()); }
};

struct ModelingError {
  Eigen::MatrixXd magnitudes;  // F x T_h, nonnegative
};

// I_{f,t} = sum over in-range crossbands f' of (-1)^{f'} C_{f,f',t}. The
// alternating sign undoes the half-window centering offset between the
// analysis grids of the wet signal and of the impulse response itself.
RirSpectrogramEstimate rir_estimate(const CtfFilterBank& bank,
                                    RirSource source = RirSource::from_estimate);

// |E_{f,t}| = |I_{f,t} - H_{f,t}| where H is the reference RIR spectrogram,
// truncated or zero-padded along time to match I.
ModelingError modeling_error(const RirSpectrogramEstimate& oracle, const Spectrogram& H);

// Power-domain subtraction: |out| = sqrt(max(|I|^2 - |E|^2, 0)), phase of I
// kept at every bin. Sets the corrected flag.
RirSpectrogramEstimate spectral_subtraction(const RirSpectrogramEstimate& I,
                                            const ModelingError& E);

// One row per (f, t): "f,t,mag_db,phase_rad"; magnitudes floored at -300 dB.
void save_rir_spec_csv(const RirSpectrogramEstimate& I, const std::filesystem::path& path);

}  // namespace rirkit
