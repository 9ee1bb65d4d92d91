// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rirkit.h"

#include <cstring>
#include <sstream>
#include <string>

#include "common.hpp"
#include "ctf.hpp"
#include "decay.hpp"
#include "grad.hpp"
#include "pipeline.hpp"
#include "rir_spec.hpp"
#include "room.hpp"
#include "stft.hpp"
#include "wav.hpp"

using namespace rirkit;

struct rk_waveform {
  Waveform w;
};
struct rk_spectrogram {
  Spectrogram s;
};
struct rk_ctf_bank {
  CtfFilterBank b;
};
struct rk_rir_spec {
  RirSpectrogramEstimate r;
};

namespace {

thread_local std::string g_last_error;

rk_status fail(rk_status code, const char* what) {
  g_last_error = what;
  return code;
}

template <typename Fn>
rk_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return RK_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<rk_status>(static_cast<int>(e.kind()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RK_ERR_NUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RK_ERR_NUMERIC;
  }
}

StftConfig to_cpp(const rk_stft_config& c) {
  StftConfig out;
  out.win_len = c.win_len;
  out.hop = c.hop;
  out.fft_len = c.fft_len;
  out.centered = c.centered != 0;
  return out;
}

CtfConfig to_cpp(const rk_ctf_config& c) {
  CtfConfig out;
  out.crossbands = c.crossbands;
  out.filter_len = c.filter_len;
  out.ridge = c.ridge;
  return out;
}

RoomSpec to_cpp(const rk_room_spec& c) {
  RoomSpec out;
  for (int i = 0; i < 3; ++i) {
    out.dims[static_cast<size_t>(i)] = c.dims[i];
    out.source_pos[static_cast<size_t>(i)] = c.source_pos[i];
    out.mic_pos[static_cast<size_t>(i)] = c.mic_pos[i];
  }
  out.rt60_target = c.rt60_target;
  out.sample_rate = c.sample_rate;
  out.max_order = c.max_order;
  out.absorption = c.absorption;
  return out;
}

SamplingRegime to_cpp(const rk_regime& c) {
  SamplingRegime out;
  for (int i = 0; i < 3; ++i) {
    out.dim_ranges[static_cast<size_t>(i)] = {c.dim_lo[i], c.dim_hi[i]};
  }
  out.rt60_range = {c.rt60_lo, c.rt60_hi};
  out.distance_range = {c.dist_lo, c.dist_hi};
  out.mics_per_room = c.mics_per_room;
  return out;
}

RunConfig to_cpp(const rk_run_config& c) {
  RunConfig out;
  out.stft = to_cpp(c.stft);
  out.ctf = to_cpp(c.ctf);
  out.regime = to_cpp(c.regime);
  out.regime_name = c.regime_name ? c.regime_name : "custom";
  out.mask_threshold_db = c.mask_threshold_db;
  out.w_phi = c.w_phi;
  out.eps_floor = c.eps_floor;
  out.excitation = c.excitation ? c.excitation : "white";
  out.dry_dir = c.dry_dir ? c.dry_dir : "";
  out.excitation_seconds = c.excitation_seconds;
  out.sample_rate = c.sample_rate;
  out.seed = c.seed;
  out.jobs = c.jobs;
  return out;
}

}  // namespace

extern "C" {

const char* rk_last_error(void) { return g_last_error.c_str(); }

rk_stft_config rk_stft_config_default(void) { return {512, 256, 512, 1}; }

rk_room_spec rk_room_spec_default(void) {
  rk_room_spec out;
  const RoomSpec d;
  for (int i = 0; i < 3; ++i) {
    out.dims[i] = d.dims[static_cast<size_t>(i)];
    out.source_pos[i] = d.source_pos[static_cast<size_t>(i)];
    out.mic_pos[i] = d.mic_pos[static_cast<size_t>(i)];
  }
  out.rt60_target = d.rt60_target;
  out.sample_rate = d.sample_rate;
  out.max_order = d.max_order;
  out.absorption = d.absorption;
  return out;
}

static rk_regime from_cpp(const SamplingRegime& r) {
  rk_regime out;
  for (int i = 0; i < 3; ++i) {
    out.dim_lo[i] = r.dim_ranges[static_cast<size_t>(i)].first;
    out.dim_hi[i] = r.dim_ranges[static_cast<size_t>(i)].second;
  }
  out.rt60_lo = r.rt60_range.first;
  out.rt60_hi = r.rt60_range.second;
  out.dist_lo = r.distance_range.first;
  out.dist_hi = r.distance_range.second;
  out.mics_per_room = r.mics_per_room;
  return out;
}

rk_regime rk_regime_matched(void) { return from_cpp(SamplingRegime::matched()); }
rk_regime rk_regime_mismatched(void) { return from_cpp(SamplingRegime::mismatched()); }

rk_run_config rk_run_config_default(void) {
  rk_run_config out;
  out.stft = rk_stft_config_default();
  out.ctf = {0, 0, 0.0};
  out.regime = rk_regime_matched();
  out.regime_name = "matched";
  out.mask_threshold_db = kMaskThresholdDb;
  out.w_phi = 0.1;
  out.eps_floor = 1e-8;
  out.excitation = "white";
  out.dry_dir = nullptr;
  out.excitation_seconds = 4.0;
  out.sample_rate = 16000;
  out.seed = 0;
  out.jobs = 1;
  return out;
}

rk_status rk_waveform_create(const double* samples, size_t n, int sample_rate,
                             rk_waveform** out) {
  if (!samples || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] {
    auto* w = new rk_waveform;
    w->w.samples.assign(samples, samples + n);
    w->w.sample_rate = sample_rate;
    *out = w;
  });
}

rk_status rk_waveform_read_wav(const char* path, rk_waveform** out) {
  if (!path || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { *out = new rk_waveform{read_wav(path)}; });
}

rk_status rk_waveform_write_wav(const rk_waveform* w, const char* path) {
  if (!w || !path) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { write_wav(path, w->w); });
}

size_t rk_waveform_length(const rk_waveform* w) { return w ? w->w.size() : 0; }

int rk_waveform_sample_rate(const rk_waveform* w) { return w ? w->w.sample_rate : 0; }

rk_status rk_waveform_copy_samples(const rk_waveform* w, double* out, size_t n) {
  if (!w || !out) return fail(RK_ERR_VALIDATION, "null argument");
  if (n < w->w.size()) return fail(RK_ERR_VALIDATION, "buffer too small");
  std::memcpy(out, w->w.samples.data(), w->w.size() * sizeof(double));
  return RK_OK;
}

void rk_waveform_free(rk_waveform* w) { delete w; }

rk_status rk_stft(const rk_waveform* w, const rk_stft_config* cfg, rk_spectrogram** out) {
  if (!w || !cfg || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { *out = new rk_spectrogram{stft(w->w, to_cpp(*cfg))}; });
}

rk_status rk_istft(const rk_spectrogram* s, int sample_rate, rk_waveform** out) {
  if (!s || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { *out = new rk_waveform{istft(s->s, sample_rate)}; });
}

rk_status rk_stft_frames(const rk_stft_config* cfg, size_t n, int* frames) {
  if (!cfg || !frames) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] {
    const StftConfig c = to_cpp(*cfg);
    c.validate();
    *frames = c.frames_for(n);
  });
}

int rk_spectrogram_bands(const rk_spectrogram* s) { return s ? s->s.bands() : 0; }

int rk_spectrogram_frames(const rk_spectrogram* s) { return s ? s->s.frames() : 0; }

rk_status rk_spectrogram_copy(const rk_spectrogram* s, double* re, double* im) {
  if (!s || !re || !im) return fail(RK_ERR_VALIDATION, "null argument");
  const auto& b = s->s.bins;
  for (int f = 0; f < b.rows(); ++f) {
    for (int t = 0; t < b.cols(); ++t) {
      re[f * b.cols() + t] = b(f, t).real();
      im[f * b.cols() + t] = b(f, t).imag();
    }
  }
  return RK_OK;
}

void rk_spectrogram_free(rk_spectrogram* s) { delete s; }

rk_status rk_estimate_ctf(const rk_spectrogram* x, const rk_spectrogram* y,
                          const rk_ctf_config* cfg, rk_ctf_bank** out) {
  if (!x || !y || !cfg || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { *out = new rk_ctf_bank{estimate_ctf(x->s, y->s, to_cpp(*cfg))}; });
}

rk_status rk_apply_ctf(const rk_ctf_bank* bank, const rk_spectrogram* x, int frames_out,
                       rk_spectrogram** out) {
  if (!bank || !x || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { *out = new rk_spectrogram{apply_ctf(bank->b, x->s, frames_out)}; });
}

rk_status rk_ls_residual(const rk_spectrogram* x, const rk_spectrogram* y,
                         const rk_ctf_bank* bank, double* out) {
  if (!x || !y || !bank || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] {
    const auto res = ls_residual(x->s, y->s, bank->b);
    std::memcpy(out, res.data(), res.size() * sizeof(double));
  });
}

int rk_ctf_bank_bands(const rk_ctf_bank* bank) { return bank ? bank->b.bands() : 0; }

int rk_ctf_bank_crossbands(const rk_ctf_bank* bank) {
  return bank ? bank->b.config.crossbands : 0;
}

int rk_ctf_bank_filter_len(const rk_ctf_bank* bank) {
  return bank ? bank->b.config.filter_len : 0;
}

int rk_ctf_bank_flagged(const rk_ctf_bank* bank, int band) {
  if (!bank || band < 0 || band >= bank->b.bands()) return 0;
  return bank->b.flagged[static_cast<size_t>(band)] != 0 ? 1 : 0;
}

rk_status rk_ctf_bank_save(const rk_ctf_bank* bank, const char* path) {
  if (!bank || !path) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { save_bank(bank->b, path); });
}

rk_status rk_ctf_bank_load(const char* path, rk_ctf_bank** out) {
  if (!path || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { *out = new rk_ctf_bank{load_bank(path)}; });
}

rk_status rk_ctf_bank_save_csv(const rk_ctf_bank* bank, const char* path) {
  if (!bank || !path) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { save_bank_csv(bank->b, path); });
}

void rk_ctf_bank_free(rk_ctf_bank* bank) { delete bank; }

rk_status rk_rir_estimate(const rk_ctf_bank* bank, rk_rir_spec** out) {
  if (!bank || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { *out = new rk_rir_spec{rir_estimate(bank->b)}; });
}

rk_status rk_spectral_subtract(const rk_rir_spec* est, const rk_rir_spec* oracle,
                               const rk_spectrogram* h_stft, rk_rir_spec** out) {
  if (!est || !oracle || !h_stft || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] {
    const ModelingError err = modeling_error(oracle->r, h_stft->s);
    *out = new rk_rir_spec{spectral_subtraction(est->r, err)};
  });
}

int rk_rir_spec_bands(const rk_rir_spec* r) { return r ? r->r.bands() : 0; }

int rk_rir_spec_frames(const rk_rir_spec* r) { return r ? r->r.frames() : 0; }

rk_status rk_rir_spec_copy(const rk_rir_spec* r, double* re, double* im) {
  if (!r || !re || !im) return fail(RK_ERR_VALIDATION, "null argument");
  const auto& b = r->r.bins;
  for (int f = 0; f < b.rows(); ++f) {
    for (int t = 0; t < b.cols(); ++t) {
      re[f * b.cols() + t] = b(f, t).real();
      im[f * b.cols() + t] = b(f, t).imag();
    }
  }
  return RK_OK;
}

rk_status rk_rir_spec_save_csv(const rk_rir_spec* r, const char* path) {
  if (!r || !path) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { save_rir_spec_csv(r->r, path); });
}

void rk_rir_spec_free(rk_rir_spec* r) { delete r; }

rk_status rk_coherence_loss(const rk_rir_spec* est, const rk_rir_spec* target,
                            double threshold_db, double* sum, double* mean) {
  if (!est || !target || !sum || !mean) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] {
    const auto stats =
        coherence_stats(edr_db(est->r, threshold_db), edr_db(target->r, threshold_db));
    *sum = stats.sum;
    *mean = stats.mean;
  });
}

rk_status rk_coherence_loss_vs_stft(const rk_rir_spec* est, const rk_spectrogram* target,
                                    double threshold_db, double* sum, double* mean) {
  if (!est || !target || !sum || !mean) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] {
    const auto stats =
        coherence_stats(edr_db(est->r, threshold_db), edr_db(target->s, threshold_db));
    *sum = stats.sum;
    *mean = stats.mean;
  });
}

rk_status rk_fourier_deconvolve(const rk_waveform* y, const rk_waveform* x,
                                double eps_floor, rk_waveform** out) {
  if (!y || !x || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { *out = new rk_waveform{fourier_deconvolve(y->w, x->w, eps_floor)}; });
}

rk_status rk_rt60(const rk_waveform* h, double* seconds) {
  if (!h || !seconds) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { *seconds = rt60_from_edc(edc_time(h->w), h->w.sample_rate); });
}

rk_status rk_metric_edc_fourier(const rk_waveform* y, const rk_waveform* x,
                                const rk_waveform* h, double eps_floor, double* out) {
  if (!y || !x || !h || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { *out = metric_edc_fourier(y->w, x->w, h->w, eps_floor); });
}

rk_status rk_coherence_loss_grad(const rk_spectrogram* x_hat, const rk_spectrogram* y,
                                 const rk_spectrogram* target_rir,
                                 const rk_ctf_config* cfg, double* d_re, double* d_im,
                                 double* loss) {
  if (!x_hat || !y || !target_rir || !cfg || !d_re || !d_im || !loss) {
    return fail(RK_ERR_VALIDATION, "null argument");
  }
  return guarded([&] {
    const LossGradient g = coherence_loss_grad(x_hat->s, y->s, target_rir->s, to_cpp(*cfg));
    const long rows = g.d_re.rows(), cols = g.d_re.cols();
    for (long f = 0; f < rows; ++f) {
      for (long t = 0; t < cols; ++t) {
        d_re[f * cols + t] = g.d_re(f, t);
        d_im[f * cols + t] = g.d_im(f, t);
      }
    }
    *loss = g.loss;
  });
}

rk_status rk_balance_weights(const double* grad_d, size_t n_d, const double* grad_phi,
                             size_t n_phi, double w_phi, double* w_phi_effective,
                             double* norm_d, double* norm_phi) {
  if (!grad_d || !grad_phi || !w_phi_effective) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] {
    const std::vector<double> gd(grad_d, grad_d + n_d);
    const std::vector<double> gp(grad_phi, grad_phi + n_phi);
    const BalanceWeights bw = balance_weights(gd, gp, w_phi);
    *w_phi_effective = bw.w_phi_effective;
    if (norm_d) *norm_d = bw.grad_norm_d;
    if (norm_phi) *norm_phi = bw.grad_norm_phi;
  });
}

rk_status rk_grad_check(uint64_t seed, int trials, int filter_len, int frames,
                        double* max_rel_error) {
  if (!max_rel_error) return fail(RK_ERR_VALIDATION, "null argument");
  if (filter_len <= 0) filter_len = 3;
  if (frames <= 0) frames = 16;
  return guarded([&] {
    *max_rel_error = grad_check(seed, trials, 40, 1e-5, filter_len, frames).max_rel_error;
  });
}

rk_status rk_sample_room(const rk_regime* regime, uint64_t seed, rk_room_spec* out) {
  if (!regime || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] {
    const RoomSpec spec = sample_room(to_cpp(*regime), seed);
    for (int i = 0; i < 3; ++i) {
      out->dims[i] = spec.dims[static_cast<size_t>(i)];
      out->source_pos[i] = spec.source_pos[static_cast<size_t>(i)];
      out->mic_pos[i] = spec.mic_pos[static_cast<size_t>(i)];
    }
    out->rt60_target = spec.rt60_target;
    out->sample_rate = spec.sample_rate;
    out->max_order = spec.max_order;
    out->absorption = spec.absorption;
  });
}

rk_status rk_synth_rir_ism(const rk_room_spec* spec, rk_waveform** out) {
  if (!spec || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { *out = new rk_waveform{synth_rir_ism(to_cpp(*spec))}; });
}

rk_status rk_synth_rir_polack(double rt60, double duration, int sample_rate, uint64_t seed,
                              rk_waveform** out) {
  if (!out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded(
      [&] { *out = new rk_waveform{synth_rir_polack(rt60, duration, sample_rate, seed)}; });
}

rk_status rk_align_direct_path(const rk_waveform* h, rk_waveform** out) {
  if (!h || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { *out = new rk_waveform{align_direct_path(h->w)}; });
}

rk_status rk_convolve(const rk_waveform* x, const rk_waveform* h, rk_waveform** out) {
  if (!x || !h || !out) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { *out = new rk_waveform{convolve(x->w, h->w)}; });
}

rk_status rk_synth_dataset(const rk_run_config* cfg, int count, const char* out_dir) {
  if (!cfg || !out_dir) return fail(RK_ERR_VALIDATION, "null argument");
  return guarded([&] { synth_dataset(to_cpp(*cfg), count, out_dir); });
}

rk_status rk_eval_manifest(const rk_run_config* cfg, const char* manifest_path,
                           const char* variants, const char* estimate_dir,
                           const char* out_csv) {
  if (!cfg || !manifest_path || !variants || !out_csv) {
    return fail(RK_ERR_VALIDATION, "null argument");
  }
  return guarded([&] {
    std::vector<std::string> vs;
    std::stringstream ss(variants);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) vs.push_back(tok);
    }
    const std::filesystem::path mpath(manifest_path);
    const auto items = load_manifest(mpath);
    std::optional<std::filesystem::path> est;
    if (estimate_dir) est = estimate_dir;
    const auto rows = eval_manifest(to_cpp(*cfg), items, mpath.parent_path(), vs, est);
    save_eval_csv(rows, out_csv);
  });
}

}  // extern "C"
