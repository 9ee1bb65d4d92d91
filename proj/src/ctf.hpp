// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "stft.hpp"

namespace rirkit {

// Crossband filter-bank configuration. crossbands == 0 is the subband model,
// crossbands == 1 the 3-band model.
struct CtfConfig {
  int crossbands = 0;   // F'
  int filter_len = 1;   // T_h, frames
  double ridge = 0.0;   // optional Tikhonov term for near-silent bands

  void validate() const;

  bool operator==(const CtfConfig&) const = default;
};

// Default filter length covering an RIR of rir_len samples under cfg.
int default_filter_len(size_t rir_len, const StftConfig& cfg);

// The (2F'+1)T_h < T_y condition guaranteeing a unique least-squares
// solution; throws a validation error when violated.
void check_rank_condition(const CtfConfig& cfg, int frames_y);

// Per-frequency crossband filters, entry [f](j, t) = C_{f, f-F'+j, t}.
// Rows whose absolute crossband index falls outside [0, F) are identically
// zero. flagged[f] marks bands whose system was rank deficient (silent dry
// input); downstream losses and metrics exclude them.
struct CtfFilterBank {
  std::vector<Eigen::MatrixXcd> filters;
  std::vector<uint8_t> flagged;
  CtfConfig config;
  StftConfig stft_config;

  int bands() const { return static_cast<int>(filters.size()); }
};

// Toeplitz matrix of delayed copies of band f: entry (t, t') = X_{f, t-t'},
// zero outside [0, T_x).
Eigen::MatrixXcd build_toeplitz(const Spectrogram& X, int band, int filter_len, int frames_out);

// Column-wise concatenation of the Toeplitz blocks for the crossbands of f
// that fall inside the spectrum; the regression matrix of the per-band
// least-squares problem. valid_lo/valid_hi (optional) receive the absolute
// crossband range kept.
Eigen::MatrixXcd stack_crossbands(const Spectrogram& X, int band, const CtfConfig& cfg,
                                  int frames_out, int* valid_lo = nullptr,
                                  int* valid_hi = nullptr);

// Least-squares estimate of the crossband filters mapping X to Y, solved per
// band with column-pivoted QR. Rank-deficient bands get the minimum-norm
// solution and are flagged.
CtfFilterBank estimate_ctf(const Spectrogram& X, const Spectrogram& Y, const CtfConfig& cfg);

// Forward model: Yhat_{f,t} = sum_{f',t'} C_{f,f',t'} X_{f',t-t'}. frames_out
// < 0 selects the full support T_x + T_h - 1.
Spectrogram apply_ctf(const CtfFilterBank& bank, const Spectrogram& X, int frames_out = -1);

// Per-band residual norms ||Xbar_f C_f - Y_f||_2.
std::vector<double> ls_residual(const Spectrogram& X, const Spectrogram& Y,
                                const CtfFilterBank& bank);

// Binary layout: "RKCB", u32 version, u32 F, u32 F', u32 T_h, u32 win_len,
// u32 hop, u32 fft_len, u32 centered, F flag bytes, then F*(2F'+1)*T_h
// little-endian (re, im) f64 pairs in (f, f', t') order.
void save_bank(const CtfFilterBank& bank, const std::filesystem::path& path);
CtfFilterBank load_bank(const std::filesystem::path& path);

// One row per in-range (f, f', t'): "f,f_prime,t,re,im".
void save_bank_csv(const CtfFilterBank& bank, const std::filesystem::path& path);

}  // namespace rirkit
