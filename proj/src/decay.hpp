// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ctf.hpp"
#include "rir_spec.hpp"
#include "stft.hpp"

namespace rirkit {

inline constexpr double kMaskThresholdDb = -20.0;
inline constexpr double kDbFloor = -300.0;

// Backward cumulative energy per band: out(f, t) = sum_{t' >= t} |bins(f, t')|^2.
Eigen::MatrixXd edr(const Eigen::MatrixXcd& bins);

// dB-scaled energy decay relief, normalized so every valid band starts at
// 0 dB. mask marks bins above threshold_db; band_valid clears bands with zero
// energy or flagged upstream (rank-deficient estimates).
struct EnergyDecayRelief {
  Eigen::MatrixXd values_db;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
  std::vector<uint8_t> band_valid;
  double threshold_db = kMaskThresholdDb;
  double floor_db = kDbFloor;

  int bands() const { return static_cast<int>(values_db.rows()); }
  int frames() const { return static_cast<int>(values_db.cols()); }
};

EnergyDecayRelief edr_db(const Eigen::MatrixXcd& bins,
                         const std::vector<uint8_t>* flagged = nullptr,
                         double threshold_db = kMaskThresholdDb, double floor_db = kDbFloor);
EnergyDecayRelief edr_db(const Spectrogram& s, double threshold_db = kMaskThresholdDb);
EnergyDecayRelief edr_db(const RirSpectrogramEstimate& e, double threshold_db = kMaskThresholdDb);

// Masked squared dB error between two decay reliefs, truncated to the common
// frame count. Only bands valid on both sides count; the mask is the
// target's. sum is the loss; mean divides by the surviving bin count.
struct CoherenceStats {
  double sum = 0.0;
  double mean = 0.0;
  long count = 0;
  int bands_used = 0;
};

CoherenceStats coherence_stats(const EnergyDecayRelief& estimate,
                               const EnergyDecayRelief& target);
double coherence_loss(const EnergyDecayRelief& estimate, const EnergyDecayRelief& target);

// Schroeder-style backward energy integral of a time-domain response,
// normalized to 0 dB at n = 0.
struct EnergyDecayCurve {
  std::vector<double> values_db;
  double floor_db = kDbFloor;
};

EnergyDecayCurve edc_time(const Waveform& h, double floor_db = kDbFloor);

// DFT-domain deconvolution: hhat = IDFT(DFT(y) / DFT(x)) on a common
// power-of-two grid covering y. Bins where |DFT(x)| falls below
// eps_floor * max |DFT(x)| switch to the Tikhonov form
// conj(X) Y / (|X|^2 + eps^2). Output has len(y) - len(x) + 1 samples.
Waveform fourier_deconvolve(const Waveform& y, const Waveform& x, double eps_floor = 1e-8);

// Reverberation time from a decay curve: straight-line fit over the
// -5..-25 dB span, extrapolated to -60 dB.
double rt60_from_edc(const EnergyDecayCurve& edc, int sample_rate);

// Evaluation metrics. metric_edc_fourier is the masked (-20 dB on the
// reference curve) mean squared dB error between the decay curves of the
// deconvolved response and h. The EDR metrics run the full estimation chain
// and report the coherence loss against the reference RIR spectrogram.
double metric_edc_fourier(const Waveform& y, const Waveform& x, const Waveform& h,
                          double eps_floor = 1e-8);
double metric_edr_subband(const Spectrogram& X, const Spectrogram& Y, const Spectrogram& H,
                          CtfConfig cfg);
double metric_edr_crossband(const Spectrogram& X, const Spectrogram& Y, const Spectrogram& H,
                            CtfConfig cfg);

}  // namespace rirkit
