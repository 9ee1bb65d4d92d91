/* Copyright 2025 rirkit authors
 * License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 *
 * C interface to the rirkit room-acoustics library: STFT analysis,
 * crossband filter estimation, RIR spectrogram recovery, energy-decay
 * metrics, analytic loss gradients, and synthetic room simulation.
 *
 * Every fallible function returns rk_status; rk_last_error() describes the
 * most recent failure on the calling thread. Returned handles are owned by
 * the caller and released with the matching *_free function.
 */

#ifndef RIRKIT_H_
#define RIRKIT_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rk_status {
  RK_OK = 0,
  RK_ERR_VALIDATION = 2, /* bad arguments, rank condition, constraint violations */
  RK_ERR_IO = 3,         /* missing/corrupt files, unwritable outputs */
  RK_ERR_NUMERIC = 4     /* numerical failure (degenerate fits, FFT errors) */
} rk_status;

/* Message for the last failure on this thread; empty string if none. */
const char* rk_last_error(void);

typedef struct rk_waveform rk_waveform;
typedef struct rk_spectrogram rk_spectrogram;
typedef struct rk_ctf_bank rk_ctf_bank;
typedef struct rk_rir_spec rk_rir_spec;

typedef struct rk_stft_config {
  int win_len;  /* analysis window length, samples */
  int hop;      /* frame advance, samples */
  int fft_len;  /* transform length (== win_len) */
  int centered; /* 1: first window centered on sample 0 */
} rk_stft_config;
rk_stft_config rk_stft_config_default(void); /* 512 / 256 Hann, centered */

typedef struct rk_ctf_config {
  int crossbands; /* neighboring bands each side (0 = subband model) */
  int filter_len; /* filter length in frames */
  double ridge;   /* optional Tikhonov term, 0 = plain least squares */
} rk_ctf_config;

typedef struct rk_room_spec {
  double dims[3];
  double rt60_target;
  double source_pos[3];
  double mic_pos[3];
  int sample_rate;
  int max_order;     /* < 0: bound images by the response length */
  double absorption; /* < 0: derive from rt60_target (Eyring) */
} rk_room_spec;
rk_room_spec rk_room_spec_default(void);

typedef struct rk_regime {
  double dim_lo[3], dim_hi[3];
  double rt60_lo, rt60_hi;
  double dist_lo, dist_hi;
  int mics_per_room;
} rk_regime;
rk_regime rk_regime_matched(void);
rk_regime rk_regime_mismatched(void);

typedef struct rk_run_config {
  rk_stft_config stft;
  rk_ctf_config ctf; /* filter_len 0: derived per item from the RIR length */
  rk_regime regime;
  const char* regime_name;
  double mask_threshold_db; /* decay mask threshold, default -20 */
  double w_phi;             /* physics loss weight, default 0.1 */
  double eps_floor;         /* deconvolution regularization, default 1e-8 */
  const char* excitation;   /* "white", "colored", or "chirp" */
  const char* dry_dir;      /* NULL: built-in excitation; else WAV directory */
  double excitation_seconds;
  int sample_rate;
  uint64_t seed;
  int jobs;
} rk_run_config;
rk_run_config rk_run_config_default(void);

/* ---- waveforms ---- */
rk_status rk_waveform_create(const double* samples, size_t n, int sample_rate,
                             rk_waveform** out);
rk_status rk_waveform_read_wav(const char* path, rk_waveform** out);
rk_status rk_waveform_write_wav(const rk_waveform* w, const char* path);
size_t rk_waveform_length(const rk_waveform* w);
int rk_waveform_sample_rate(const rk_waveform* w);
/* Copies exactly rk_waveform_length(w) doubles into out. */
rk_status rk_waveform_copy_samples(const rk_waveform* w, double* out, size_t n);
void rk_waveform_free(rk_waveform* w);

/* ---- STFT ---- */
rk_status rk_stft(const rk_waveform* w, const rk_stft_config* cfg, rk_spectrogram** out);
rk_status rk_istft(const rk_spectrogram* s, int sample_rate, rk_waveform** out);
/* Frame count the analysis produces for a signal of n samples. */
rk_status rk_stft_frames(const rk_stft_config* cfg, size_t n, int* frames);
int rk_spectrogram_bands(const rk_spectrogram* s);
int rk_spectrogram_frames(const rk_spectrogram* s);
/* Row-major bands x frames; both buffers need bands*frames doubles. */
rk_status rk_spectrogram_copy(const rk_spectrogram* s, double* re, double* im);
void rk_spectrogram_free(rk_spectrogram* s);

/* ---- crossband filter estimation ---- */
rk_status rk_estimate_ctf(const rk_spectrogram* x, const rk_spectrogram* y,
                          const rk_ctf_config* cfg, rk_ctf_bank** out);
rk_status rk_apply_ctf(const rk_ctf_bank* bank, const rk_spectrogram* x, int frames_out,
                       rk_spectrogram** out);
rk_status rk_ls_residual(const rk_spectrogram* x, const rk_spectrogram* y,
                         const rk_ctf_bank* bank, double* out /* bands */);
int rk_ctf_bank_bands(const rk_ctf_bank* bank);
int rk_ctf_bank_crossbands(const rk_ctf_bank* bank);
int rk_ctf_bank_filter_len(const rk_ctf_bank* bank);
/* 1 when the band's system was rank deficient (excluded downstream). */
int rk_ctf_bank_flagged(const rk_ctf_bank* bank, int band);
rk_status rk_ctf_bank_save(const rk_ctf_bank* bank, const char* path);
rk_status rk_ctf_bank_load(const char* path, rk_ctf_bank** out);
rk_status rk_ctf_bank_save_csv(const rk_ctf_bank* bank, const char* path);
void rk_ctf_bank_free(rk_ctf_bank* bank);

/* ---- RIR spectrogram recovery ---- */
rk_status rk_rir_estimate(const rk_ctf_bank* bank, rk_rir_spec** out);
/* Correct `est` by the modeling error |oracle - stft(h)|, phase preserved. */
rk_status rk_spectral_subtract(const rk_rir_spec* est, const rk_rir_spec* oracle,
                               const rk_spectrogram* h_stft, rk_rir_spec** out);
int rk_rir_spec_bands(const rk_rir_spec* r);
int rk_rir_spec_frames(const rk_rir_spec* r);
rk_status rk_rir_spec_copy(const rk_rir_spec* r, double* re, double* im);
rk_status rk_rir_spec_save_csv(const rk_rir_spec* r, const char* path);
void rk_rir_spec_free(rk_rir_spec* r);

/* ---- energy decay ---- */
/* Masked squared-dB decay mismatch; mean divides by surviving bins. */
rk_status rk_coherence_loss(const rk_rir_spec* est, const rk_rir_spec* target,
                            double threshold_db, double* sum, double* mean);
rk_status rk_coherence_loss_vs_stft(const rk_rir_spec* est, const rk_spectrogram* target,
                                    double threshold_db, double* sum, double* mean);
rk_status rk_fourier_deconvolve(const rk_waveform* y, const rk_waveform* x,
                                double eps_floor, rk_waveform** out);
rk_status rk_rt60(const rk_waveform* h, double* seconds);
rk_status rk_metric_edc_fourier(const rk_waveform* y, const rk_waveform* x,
                                const rk_waveform* h, double eps_floor, double* out);

/* ---- gradient ---- */
/* d_re/d_im: bands x frames(x_hat) row-major buffers for dL/dRe, dL/dIm. */
rk_status rk_coherence_loss_grad(const rk_spectrogram* x_hat, const rk_spectrogram* y,
                                 const rk_spectrogram* target_rir,
                                 const rk_ctf_config* cfg, double* d_re, double* d_im,
                                 double* loss);
rk_status rk_balance_weights(const double* grad_d, size_t n_d, const double* grad_phi,
                             size_t n_phi, double w_phi, double* w_phi_effective,
                             double* norm_d, double* norm_phi);
/* Analytic-vs-finite-difference check on random small instances of
 * `frames` frames with filters of `filter_len` frames (pass 0,0 for the
 * defaults); rank-violating shapes are rejected up front. */
rk_status rk_grad_check(uint64_t seed, int trials, int filter_len, int frames,
                        double* max_rel_error);

/* ---- room synthesis ---- */
rk_status rk_sample_room(const rk_regime* regime, uint64_t seed, rk_room_spec* out);
rk_status rk_synth_rir_ism(const rk_room_spec* spec, rk_waveform** out);
rk_status rk_synth_rir_polack(double rt60, double duration, int sample_rate, uint64_t seed,
                              rk_waveform** out);
rk_status rk_align_direct_path(const rk_waveform* h, rk_waveform** out);
rk_status rk_convolve(const rk_waveform* x, const rk_waveform* h, rk_waveform** out);

/* ---- batch pipeline ---- */
/* Writes count items plus manifest.csv into out_dir. */
rk_status rk_synth_dataset(const rk_run_config* cfg, int count, const char* out_dir);
/* variants: comma-separated subset of SB,SSB,CSB,3B,EDC-Fourier.
 * estimate_dir may be NULL (dry oracle). Writes per-item rows + summary. */
rk_status rk_eval_manifest(const rk_run_config* cfg, const char* manifest_path,
                           const char* variants, const char* estimate_dir,
                           const char* out_csv);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RIRKIT_H_ */
