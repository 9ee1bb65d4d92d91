// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "ctf.hpp"
#include "decay.hpp"
#include "grad.hpp"
#include "pipeline.hpp"
#include "rir_spec.hpp"
#include "rng.hpp"
#include "room.hpp"
#include "stft.hpp"
#include "wav.hpp"

using namespace rirkit;
namespace fs = std::filesystem;

namespace {

// Criterion budgets and tolerances, fixed here so a regression cannot pass
// by loosening them elsewhere.
constexpr double kC1MeanTol = 1e-3;
constexpr double kC1BudgetS = 120.0;
constexpr int kC1Items = 100;
constexpr double kC2CoeffTol = 1e-8;
constexpr double kC2BudgetS = 60.0;
constexpr int kC2Trials = 50;
constexpr double kC3RelTol = 1e-6;
constexpr int kC3Signals = 100;
constexpr double kC4RelTol = 1e-4;
constexpr int kC4Trials = 20;
constexpr double kC5RatioTol = 1e-12;
constexpr double kC6PolackMedianTol = 0.10;
constexpr int kC6PolackSeeds = 100;
constexpr double kC6IsmMedianTol = 0.20;
constexpr int kC6IsmRooms = 50;
constexpr double kC7PositiveFraction = 0.95;
constexpr int kC7Items = 20;
constexpr int kC9Matrices = 1000;

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rirkit_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

StftConfig tiny_cfg() {
  StftConfig cfg;
  cfg.win_len = 8;
  cfg.hop = 4;
  cfg.fft_len = 8;
  return cfg;
}

Spectrogram random_spec(int frames, uint64_t seed) {
  Spectrogram s;
  s.config = tiny_cfg();
  s.bins.resize(s.config.bands(), frames);
  Rng rng(seed);
  for (int f = 0; f < s.bands(); ++f) {
    for (int t = 0; t < frames; ++t) s.bins(f, t) = {rng.gaussian(), rng.gaussian()};
  }
  return s;
}

CtfFilterBank random_bank(int crossbands, int filter_len, uint64_t seed) {
  CtfFilterBank bank;
  bank.config = CtfConfig{crossbands, filter_len, 0.0};
  bank.stft_config = tiny_cfg();
  const int F = bank.stft_config.bands();
  bank.filters.assign(static_cast<size_t>(F),
                      Eigen::MatrixXcd::Zero(2 * crossbands + 1, filter_len));
  bank.flagged.assign(static_cast<size_t>(F), 0);
  Rng rng(seed);
  for (int f = 0; f < F; ++f) {
    for (int j = 0; j < 2 * crossbands + 1; ++j) {
      const int fp = f - crossbands + j;
      if (fp < 0 || fp >= F) continue;
      for (int t = 0; t < filter_len; ++t) {
        bank.filters[static_cast<size_t>(f)](j, t) =
            std::complex<double>(rng.gaussian(), rng.gaussian());
      }
    }
  }
  return bank;
}

// --- criterion 1: oracle decay metric over a synthetic dataset ------------

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    RunConfig cfg;
    cfg.seed = 1;
    cfg.jobs = 4;
    const fs::path dir = fresh_dir("c1");
    const auto items = synth_dataset(cfg, kC1Items, dir);
    const auto rows = eval_manifest(cfg, items, dir, {"EDC-Fourier"}, std::nullopt);
    double mean = 0.0;
    for (const EvalRow& r : rows) mean += r.value;
    mean /= static_cast<double>(rows.size());
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = rows.size() == static_cast<size_t>(kC1Items) && mean < kC1MeanTol &&
                      secs < kC1BudgetS;
    report(1, pass,
           fmt("oracle deconvolution decay metric over %d items: mean %.3g (tol %.0e), "
               "%.1f s (budget %.0f s)",
               kC1Items, mean, kC1MeanTol, secs, kC1BudgetS));
  } catch (const std::exception& e) {
    report(1, false, std::string("exception: ") + e.what());
  }
}

// --- criterion 2: construct-then-recover filter identification ------------

void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    double worst = 0.0;
    for (int crossbands : {0, 1}) {
      for (int trial = 0; trial < kC2Trials; ++trial) {
        const uint64_t seed = static_cast<uint64_t>(crossbands * 10000 + trial);
        const Spectrogram X = random_spec(40, seed + 11);
        const CtfFilterBank truth = random_bank(crossbands, 4, seed + 500);
        const Spectrogram Y = apply_ctf(truth, X);
        const CtfFilterBank est = estimate_ctf(X, Y, truth.config);
        for (size_t f = 0; f < truth.filters.size(); ++f) {
          worst = std::max(worst,
                           (est.filters[f] - truth.filters[f]).cwiseAbs().maxCoeff());
        }
      }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = worst < kC2CoeffTol && secs < kC2BudgetS;
    report(2, pass,
           fmt("filter recovery over %d constructions per model: max coefficient error "
               "%.3g (tol %.0e), %.1f s (budget %.0f s)",
               kC2Trials, worst, kC2CoeffTol, secs, kC2BudgetS));
  } catch (const std::exception& e) {
    report(2, false, std::string("exception: ") + e.what());
  }
}

// --- criterion 3: analysis-synthesis round trip ---------------------------

void criterion3() {
  try {
    StftConfig cfg;
    double worst = 0.0;
    for (int i = 0; i < kC3Signals; ++i) {
      Rng rng(static_cast<uint64_t>(9000 + i));
      const size_t n = static_cast<size_t>(rng.uniform(0.5, 4.0) * 16000.0);
      Waveform w;
      w.sample_rate = 16000;
      w.samples.resize(n);
      for (double& v : w.samples) v = rng.gaussian();
      const Waveform back = istft(stft(w, cfg), 16000);
      double num = 0.0, den = 0.0;
      for (size_t k = 0; k < n; ++k) {
        num += (back.samples[k] - w.samples[k]) * (back.samples[k] - w.samples[k]);
        den += w.samples[k] * w.samples[k];
      }
      worst = std::max(worst, std::sqrt(num / den));
    }
    report(3, worst < kC3RelTol,
           fmt("analysis-synthesis round trip on %d signals of 0.5-4 s: worst relative "
               "error %.3g (tol %.0e)",
               kC3Signals, worst, kC3RelTol));
  } catch (const std::exception& e) {
    report(3, false, std::string("exception: ") + e.what());
  }
}

// --- criterion 4: analytic gradient vs finite differences -----------------

void criterion4() {
  try {
    const GradCheckReport rep = grad_check(4, kC4Trials, 40, 1e-5, 3, 16);
    report(4, rep.max_rel_error < kC4RelTol,
           fmt("analytic vs finite-difference gradient on %d instances (%d coordinates): "
               "max relative error %.3g (tol %.0e)",
               rep.trials, rep.coords, rep.max_rel_error, kC4RelTol));
  } catch (const std::exception& e) {
    report(4, false, std::string("exception: ") + e.what());
  }
}

// --- criterion 5: gradient-norm balancing identity ------------------------

void criterion5() {
  try {
    double worst = 0.0;
    for (uint64_t seed = 0; seed < 25; ++seed) {
      Rng rng(seed + 300);
      std::vector<double> gd(64), gp(64);
      for (double& v : gd) v = rng.gaussian();
      for (double& v : gp) v = std::pow(10.0, rng.uniform(-3.0, 3.0)) * rng.gaussian();
      const BalanceWeights w = balance_weights(gd, gp, 0.1);
      double nd = 0.0, np = 0.0;
      for (double v : gd) nd += v * v;
      for (double v : gp) np += (w.w_phi_effective * v) * (w.w_phi_effective * v);
      worst = std::max(worst, std::abs(std::sqrt(np) / std::sqrt(nd) - 0.1));
    }
    report(5, worst < kC5RatioTol,
           fmt("balanced physics-to-data gradient norm ratio: worst deviation from 0.1 "
               "is %.3g (tol %.0e)",
               worst, kC5RatioTol));
  } catch (const std::exception& e) {
    report(5, false, std::string("exception: ") + e.what());
  }
}

// --- criterion 6: reverberation-time accuracy of both synthesizers --------

void criterion6() {
  try {
    std::vector<double> polack_err;
    for (int i = 0; i < kC6PolackSeeds; ++i) {
      Rng rng(static_cast<uint64_t>(600 + i));
      const double rt = rng.uniform(0.2, 1.0);
      const Waveform h = synth_rir_polack(rt, 1.25 * rt, 16000, static_cast<uint64_t>(i));
      const double got = rt60_from_edc(edc_time(h), 16000);
      polack_err.push_back(std::abs(got - rt) / rt);
    }
    const double polack_med = median(polack_err);

    std::vector<double> ism_err;
    const SamplingRegime regime = SamplingRegime::matched();
    for (int i = 0; i < kC6IsmRooms; ++i) {
      const RoomSpec spec = sample_room(regime, static_cast<uint64_t>(i));
      const Waveform h = synth_rir_ism(spec);
      const double got = rt60_from_edc(edc_time(h), spec.sample_rate);
      ism_err.push_back(std::abs(got - spec.rt60_target) / spec.rt60_target);
    }
    const double ism_med = median(ism_err);

    const bool pass = polack_med < kC6PolackMedianTol && ism_med < kC6IsmMedianTol;
    report(6, pass,
           fmt("reverberation-time recovery: statistical median error %.3f (tol %.2f) over "
               "%d responses, image-source median error %.3f (tol %.2f) over %d rooms",
               polack_med, kC6PolackMedianTol, kC6PolackSeeds, ism_med, kC6IsmMedianTol,
               kC6IsmRooms));
  } catch (const std::exception& e) {
    report(6, false, std::string("exception: ") + e.what());
  }
}

// --- criterion 7: correction floors and strict subband positivity ---------

void criterion7() {
  try {
    RunConfig cfg;
    cfg.seed = 7;
    cfg.jobs = 4;
    cfg.excitation_seconds = 1.0;
    const fs::path dir = fresh_dir("c7");
    const auto items = synth_dataset(cfg, kC7Items, dir);
    const auto rows = eval_manifest(cfg, items, dir, {"SB", "SSB", "CSB"}, std::nullopt);
    int ssb_csb_zero = 0, ssb_csb_total = 0, sb_positive = 0, sb_total = 0;
    for (const EvalRow& r : rows) {
      if (r.metric == "SSB" || r.metric == "CSB") {
        ++ssb_csb_total;
        if (r.value == 0.0) ++ssb_csb_zero;
      } else if (r.metric == "SB") {
        ++sb_total;
        if (r.value > 0.0) ++sb_positive;
      }
    }
    const double frac =
        sb_total > 0 ? static_cast<double>(sb_positive) / static_cast<double>(sb_total) : 0.0;
    const bool pass = ssb_csb_total == 2 * kC7Items && ssb_csb_zero == ssb_csb_total &&
                      frac >= kC7PositiveFraction;
    report(7, pass,
           fmt("corrected estimates exactly zero on %d/%d oracle items; uncorrected "
               "subband loss positive on %.0f%% (need >= %.0f%%)",
               ssb_csb_zero, ssb_csb_total, 100.0 * frac, 100.0 * kC7PositiveFraction));
  } catch (const std::exception& e) {
    report(7, false, std::string("exception: ") + e.what());
  }
}

// --- criterion 8: rank-condition rejection, library and process level -----

int run_cli_code(const std::string& args) {
  const std::string cmd = std::string(RK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion8() {
  try {
    // library level: every violating shape throws a validation error
    int rejected = 0, total = 0;
    for (int crossbands : {0, 1, 2}) {
      for (int filter_len : {1, 2, 3, 5, 8}) {
        for (int frames_y : {1, 2, 3, 6, 10, 15}) {
          if ((2 * crossbands + 1) * filter_len < frames_y) continue;  // satisfiable
          ++total;
          Spectrogram X = random_spec(frames_y, 42);
          Spectrogram Y = random_spec(frames_y, 43);
          try {
            estimate_ctf(X, Y, CtfConfig{crossbands, filter_len, 0.0});
          } catch (const Error& e) {
            if (e.kind() == ErrorKind::validation) ++rejected;
          }
        }
      }
    }
    // process level: the same violation exits with the validation code
    const fs::path dir = fresh_dir("c8");
    Rng rng(88);
    Waveform w;
    w.sample_rate = 16000;
    w.samples.resize(600);
    for (double& v : w.samples) v = rng.gaussian();
    write_wav(dir / "x.wav", w);
    const int code = run_cli_code("estimate --x " + (dir / "x.wav").string() + " --y " +
                                  (dir / "x.wav").string() + " --out-dir " + dir.string() +
                                  " --filter-len 64");
    const bool pass = total > 0 && rejected == total && code == 2;
    report(8, pass,
           fmt("identifiability guard: %d/%d undetermined systems rejected as validation "
               "errors; violating CLI run exited %d (want 2)",
               rejected, total, code));
  } catch (const std::exception& e) {
    report(8, false, std::string("exception: ") + e.what());
  }
}

// --- criterion 9: spectral-subtraction contract ---------------------------

void criterion9() {
  try {
    int ok = 0;
    for (int trial = 0; trial < kC9Matrices; ++trial) {
      Rng rng(static_cast<uint64_t>(900000 + trial));
      const int F = 2 + static_cast<int>(rng.next_u64() % 7);
      const int T = 1 + static_cast<int>(rng.next_u64() % 6);
      RirSpectrogramEstimate I;
      I.stft_config = tiny_cfg();
      I.flagged.assign(static_cast<size_t>(F), 0);
      I.bins.resize(F, T);
      ModelingError E;
      E.magnitudes.resize(F, T);
      for (int f = 0; f < F; ++f) {
        for (int t = 0; t < T; ++t) {
          I.bins(f, t) = std::complex<double>(rng.gaussian(), rng.gaussian());
          E.magnitudes(f, t) = std::abs(rng.gaussian());
        }
      }
      const RirSpectrogramEstimate out = spectral_subtraction(I, E);
      bool good = out.corrected;
      for (int f = 0; f < F && good; ++f) {
        for (int t = 0; t < T && good; ++t) {
          const double m0 = std::abs(I.bins(f, t));
          const double m1 = std::abs(out.bins(f, t));
          if (m1 > m0 + 1e-12) good = false;
          if (m1 > 0.0 && m0 > 0.0) {
            const std::complex<double> p0 = I.bins(f, t) / m0;
            const std::complex<double> p1 = out.bins(f, t) / m1;
            if (std::abs(p1 - p0) > 1e-9) good = false;
          }
        }
      }
      if (good) ++ok;
    }
    report(9, ok == kC9Matrices,
           fmt("magnitude-shrinking, phase-preserving correction on %d/%d random "
               "spectrogram pairs",
               ok, kC9Matrices));
  } catch (const std::exception& e) {
    report(9, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all 9 criteria passed\n");
  return 0;
}
