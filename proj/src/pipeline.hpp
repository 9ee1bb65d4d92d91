// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ctf.hpp"
#include "decay.hpp"
#include "grad.hpp"
#include "room.hpp"
#include "stft.hpp"

namespace rirkit {

struct RunConfig {
  StftConfig stft;
  CtfConfig ctf{.crossbands = 0, .filter_len = 0, .ridge = 0.0};  // filter_len 0: derive
  SamplingRegime regime = SamplingRegime::matched();
  std::string regime_name = "matched";
  double mask_threshold_db = kMaskThresholdDb;
  double w_phi = 0.1;
  double eps_floor = 1e-8;
  // Built-in dry-source family: "white", "colored" (low-passed noise), or
  // "chirp" (summed tone sweeps). A nonempty dry_dir overrides them with the
  // directory's WAV files assigned round-robin.
  std::string excitation = "white";
  std::string dry_dir;
  double excitation_seconds = 4.0;
  int sample_rate = 16000;
  uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

struct ManifestItem {
  std::string item_id;
  uint64_t seed = 0;
  std::string regime;
  std::array<double, 3> dims{};
  double rt60_target = 0.0;
  double rt60_measured = 0.0;
  std::array<double, 3> source{};
  std::array<double, 3> mic{};
  std::string x_path, h_path, y_path;  // relative to the manifest directory
};

// Synthesize count items (rooms of mics_per_room microphones, filled in
// order): dry excitation x, aligned image-source RIR h, and y = conv(x, h),
// all written as WAV next to a manifest CSV. Deterministic per
// (config, seed); byte-identical across runs.
std::vector<ManifestItem> synth_dataset(const RunConfig& cfg, int count,
                                        const std::filesystem::path& out_dir);

void save_manifest(const std::vector<ManifestItem>& items, const std::filesystem::path& path);
std::vector<ManifestItem> load_manifest(const std::filesystem::path& path);

// One evaluated metric for one item. For the EDR variants value is the
// masked squared-dB sum and masked_mean the per-bin mean; the EDC metric is a
// masked mean already, reported in both columns.
struct EvalRow {
  std::string item_id;
  std::string metric;
  double value = 0.0;
  double masked_mean = 0.0;
};

inline const std::vector<std::string> kEvalVariants = {"SB", "SSB", "CSB", "3B",
                                                       "EDC-Fourier"};

// Evaluate the requested variants over every manifest item. The dry
// estimate defaults to the oracle x; when estimate_dir is set, it is read
// from <estimate_dir>/<item_id>_xhat.wav instead. Rows come back grouped by
// item (manifest order), then variant (requested order).
std::vector<EvalRow> eval_manifest(const RunConfig& cfg,
                                   const std::vector<ManifestItem>& items,
                                   const std::filesystem::path& manifest_dir,
                                   const std::vector<std::string>& variants,
                                   const std::optional<std::filesystem::path>& estimate_dir);

// Append mean/std summary rows per metric and write "item_id,metric,value,masked_mean".
void save_eval_csv(const std::vector<EvalRow>& rows, const std::filesystem::path& path);

struct GradCheckReport {
  double max_rel_error = 0.0;
  int trials = 0;
  int coords = 0;
};

// Analytic gradient vs central finite differences on random small
// instances (9 bands, `frames` frames, filters of `filter_len` frames);
// fd_step on each sampled coordinate. Rejects rank-violating shapes before
// running anything.
GradCheckReport grad_check(uint64_t seed, int trials, int coords_per_trial = 40,
                           double fd_step = 1e-5, int filter_len = 3, int frames = 16);

}  // namespace rirkit
