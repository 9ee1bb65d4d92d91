// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Command-line front end. Links the shared library through the public C
// interface only; exit codes follow rk_status (0 ok, 2 validation, 3 io,
// 4 numeric).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rirkit.h"

namespace {

struct WaveformDeleter {
  void operator()(rk_waveform* w) const { rk_waveform_free(w); }
};
struct SpectrogramDeleter {
  void operator()(rk_spectrogram* s) const { rk_spectrogram_free(s); }
};
struct BankDeleter {
  void operator()(rk_ctf_bank* b) const { rk_ctf_bank_free(b); }
};
struct RirSpecDeleter {
  void operator()(rk_rir_spec* r) const { rk_rir_spec_free(r); }
};

using WaveformPtr = std::unique_ptr<rk_waveform, WaveformDeleter>;
using SpectrogramPtr = std::unique_ptr<rk_spectrogram, SpectrogramDeleter>;
using BankPtr = std::unique_ptr<rk_ctf_bank, BankDeleter>;
using RirSpecPtr = std::unique_ptr<rk_rir_spec, RirSpecDeleter>;

int report(rk_status st) {
  if (st != RK_OK) std::cerr << "error: " << rk_last_error() << "\n";
  return static_cast<int>(st);
}

WaveformPtr load_wav_or_null(const std::string& path, rk_status* st) {
  rk_waveform* w = nullptr;
  *st = rk_waveform_read_wav(path.c_str(), &w);
  return WaveformPtr(w);
}

struct SynthArgs {
  std::string out_dir;
  int count = 0;
  std::string regime = "matched";
  std::string excitation = "white";
  std::string dry_dir;
  uint64_t seed = 0;
  int jobs = 1;
  double excitation_seconds = 4.0;
  int sample_rate = 16000;
};

int run_synth(const SynthArgs& a) {
  rk_run_config cfg = rk_run_config_default();
  cfg.regime = a.regime == "mismatched" ? rk_regime_mismatched() : rk_regime_matched();
  cfg.regime_name = a.regime.c_str();
  cfg.excitation = a.excitation.c_str();
  cfg.dry_dir = a.dry_dir.empty() ? nullptr : a.dry_dir.c_str();
  cfg.seed = a.seed;
  cfg.jobs = a.jobs;
  cfg.excitation_seconds = a.excitation_seconds;
  cfg.sample_rate = a.sample_rate;
  const rk_status st = rk_synth_dataset(&cfg, a.count, a.out_dir.c_str());
  if (st == RK_OK) {
    std::cout << "wrote " << a.count << " items and manifest.csv to " << a.out_dir << "\n";
  }
  return report(st);
}

struct EstimateArgs {
  std::string x_path, y_path, out_dir;
  int win_len = 512;
  int hop = 256;
  int crossbands = 0;
  int filter_len = 0;  // 0: derive from the frame-count difference
  double ridge = 0.0;
};

int run_estimate(const EstimateArgs& a) {
  rk_status st = RK_OK;
  WaveformPtr x = load_wav_or_null(a.x_path, &st);
  if (st != RK_OK) return report(st);
  WaveformPtr y = load_wav_or_null(a.y_path, &st);
  if (st != RK_OK) return report(st);

  rk_stft_config scfg = rk_stft_config_default();
  scfg.win_len = a.win_len;
  scfg.hop = a.hop;
  scfg.fft_len = a.win_len;

  rk_spectrogram* Xp = nullptr;
  if ((st = rk_stft(x.get(), &scfg, &Xp)) != RK_OK) return report(st);
  SpectrogramPtr X(Xp);
  rk_spectrogram* Yp = nullptr;
  if ((st = rk_stft(y.get(), &scfg, &Yp)) != RK_OK) return report(st);
  SpectrogramPtr Y(Yp);

  rk_ctf_config ccfg{a.crossbands, a.filter_len, a.ridge};
  if (ccfg.filter_len <= 0) {
    ccfg.filter_len =
        std::max(1, rk_spectrogram_frames(Y.get()) - rk_spectrogram_frames(X.get()) + 1);
  }

  rk_ctf_bank* bankp = nullptr;
  if ((st = rk_estimate_ctf(X.get(), Y.get(), &ccfg, &bankp)) != RK_OK) return report(st);
  BankPtr bank(bankp);

  std::error_code ec;
  std::filesystem::create_directories(a.out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create " << a.out_dir << "\n";
    return 3;
  }
  const std::filesystem::path dir(a.out_dir);
  if ((st = rk_ctf_bank_save(bank.get(), (dir / "bank.rkcb").string().c_str())) != RK_OK) {
    return report(st);
  }
  if ((st = rk_ctf_bank_save_csv(bank.get(), (dir / "bank.csv").string().c_str())) != RK_OK) {
    return report(st);
  }

  rk_rir_spec* rirp = nullptr;
  if ((st = rk_rir_estimate(bank.get(), &rirp)) != RK_OK) return report(st);
  RirSpecPtr rir(rirp);
  if ((st = rk_rir_spec_save_csv(rir.get(), (dir / "rir.csv").string().c_str())) != RK_OK) {
    return report(st);
  }

  const int bands = rk_ctf_bank_bands(bank.get());
  std::vector<double> residual(static_cast<size_t>(bands));
  if ((st = rk_ls_residual(X.get(), Y.get(), bank.get(), residual.data())) != RK_OK) {
    return report(st);
  }
  std::ofstream os(dir / "residuals.csv");
  if (!os) {
    std::cerr << "error: cannot write residuals.csv\n";
    return 3;
  }
  os << "f,residual\n";
  double max_res = 0.0, sum_res = 0.0;
  int flagged = 0;
  char buf[64];
  for (int f = 0; f < bands; ++f) {
    std::snprintf(buf, sizeof(buf), "%.17g", residual[static_cast<size_t>(f)]);
    os << f << ',' << buf << '\n';
    max_res = std::max(max_res, residual[static_cast<size_t>(f)]);
    sum_res += residual[static_cast<size_t>(f)];
    flagged += rk_ctf_bank_flagged(bank.get(), f);
  }
  std::printf("bands=%d filter_len=%d crossbands=%d flagged=%d\n", bands, ccfg.filter_len,
              ccfg.crossbands, flagged);
  std::printf("residual max=%.6g mean=%.6g\n", max_res, sum_res / std::max(1, bands));
  std::cout << "wrote bank.rkcb, bank.csv, rir.csv, residuals.csv to " << a.out_dir << "\n";
  return 0;
}

struct EvalArgs {
  std::string manifest, out_csv;
  std::vector<std::string> variants;
  std::string estimate_dir;
  int filter_len = 0;
  double ridge = 0.0;
  double eps_floor = 1e-8;
  double threshold_db = -20.0;
  int win_len = 512;
  int hop = 256;
  int jobs = 1;
};

int run_eval(const EvalArgs& a) {
  rk_run_config cfg = rk_run_config_default();
  cfg.stft.win_len = a.win_len;
  cfg.stft.hop = a.hop;
  cfg.stft.fft_len = a.win_len;
  cfg.ctf.filter_len = a.filter_len;
  cfg.ctf.ridge = a.ridge;
  cfg.eps_floor = a.eps_floor;
  cfg.mask_threshold_db = a.threshold_db;
  cfg.jobs = a.jobs;
  std::string variants;
  const auto& list = a.variants.empty()
                         ? std::vector<std::string>{"SB", "SSB", "CSB", "3B", "EDC-Fourier"}
                         : a.variants;
  for (size_t i = 0; i < list.size(); ++i) {
    if (i) variants += ',';
    variants += list[i];
  }
  const rk_status st =
      rk_eval_manifest(&cfg, a.manifest.c_str(), variants.c_str(),
                       a.estimate_dir.empty() ? nullptr : a.estimate_dir.c_str(),
                       a.out_csv.c_str());
  if (st != RK_OK) return report(st);

  std::ifstream is(a.out_csv);
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("mean,", 0) == 0 || line.rfind("std,", 0) == 0) {
      std::cout << line << "\n";
    }
  }
  std::cout << "wrote " << a.out_csv << "\n";
  return 0;
}

struct GradCheckArgs {
  uint64_t seed = 0;
  int trials = 20;
  int filter_len = 3;
  int frames = 16;
  double tolerance = 1e-4;
};

int run_grad_check(const GradCheckArgs& a) {
  double max_rel = 0.0;
  const rk_status st = rk_grad_check(a.seed, a.trials, a.filter_len, a.frames, &max_rel);
  if (st != RK_OK) return report(st);
  std::printf("trials=%d max_rel_error=%.6g tolerance=%.6g\n", a.trials, max_rel,
              a.tolerance);
  if (a.trials > 0 && max_rel > a.tolerance) {
    std::cerr << "error: gradient check failed\n";
    return 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rirkit: STFT-domain room impulse response estimation toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read option defaults from an INI file");

  SynthArgs synth;
  CLI::App* cmd_synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  cmd_synth->add_option("--out", synth.out_dir, "Output directory")->required();
  cmd_synth->add_option("--count", synth.count, "Number of items")
      ->required()
      ->check(CLI::Range(0, std::numeric_limits<int>::max()));
  cmd_synth->add_option("--regime", synth.regime, "Room sampling regime")
      ->check(CLI::IsMember({"matched", "mismatched"}));
  cmd_synth->add_option("--excitation", synth.excitation, "Built-in dry source")
      ->check(CLI::IsMember({"white", "colored", "chirp"}));
  cmd_synth->add_option("--dry-dir", synth.dry_dir,
                        "Directory of dry WAV files assigned round-robin");
  cmd_synth->add_option("--seed", synth.seed, "Random seed");
  cmd_synth->add_option("--jobs", synth.jobs, "Worker threads")
      ->check(CLI::Range(1, std::numeric_limits<int>::max()));
  cmd_synth->add_option("--excitation-seconds", synth.excitation_seconds,
                        "Dry excitation length");
  cmd_synth->add_option("--sample-rate", synth.sample_rate, "Sample rate in Hz");

  EstimateArgs est;
  CLI::App* cmd_est =
      app.add_subcommand("estimate", "Estimate crossband filters and an RIR spectrogram");
  cmd_est->add_option("--x", est.x_path, "Dry WAV")->required();
  cmd_est->add_option("--y", est.y_path, "Reverberant WAV")->required();
  cmd_est->add_option("--out-dir", est.out_dir, "Output directory")->required();
  cmd_est->add_option("--win-len", est.win_len, "Analysis window length");
  cmd_est->add_option("--hop", est.hop, "Analysis hop");
  cmd_est->add_option("--crossbands", est.crossbands, "Crossbands per side");
  cmd_est->add_option("--filter-len", est.filter_len, "Filter length in frames (0: derive)");
  cmd_est->add_option("--ridge", est.ridge, "Tikhonov term");

  EvalArgs ev;
  CLI::App* cmd_eval = app.add_subcommand("eval", "Evaluate metrics over a dataset");
  cmd_eval->add_option("--manifest", ev.manifest, "Manifest CSV path")->required();
  cmd_eval->add_option("--out", ev.out_csv, "Output metrics CSV")->required();
  cmd_eval->add_option("--variant", ev.variants,
                       "Variant (repeatable): SB, SSB, CSB, 3B, EDC-Fourier");
  cmd_eval->add_option("--estimate-dir", ev.estimate_dir,
                       "Directory with <item>_xhat.wav dry estimates");
  cmd_eval->add_option("--filter-len", ev.filter_len, "Filter length in frames (0: derive)");
  cmd_eval->add_option("--ridge", ev.ridge, "Tikhonov term");
  cmd_eval->add_option("--eps-floor", ev.eps_floor, "Deconvolution regularization");
  cmd_eval->add_option("--threshold", ev.threshold_db, "Decay mask threshold in dB");
  cmd_eval->add_option("--win-len", ev.win_len, "Analysis window length");
  cmd_eval->add_option("--hop", ev.hop, "Analysis hop");
  cmd_eval->add_option("--jobs", ev.jobs, "Worker threads")
      ->check(CLI::Range(1, std::numeric_limits<int>::max()));

  GradCheckArgs gc;
  CLI::App* cmd_gc = app.add_subcommand("grad-check", "Finite-difference gradient check");
  cmd_gc->add_option("--seed", gc.seed, "Random seed");
  cmd_gc->add_option("--trials", gc.trials, "Instances to test")
      ->check(CLI::Range(0, std::numeric_limits<int>::max()));
  cmd_gc->add_option("--filter-len", gc.filter_len, "Instance filter length");
  cmd_gc->add_option("--frames", gc.frames, "Instance frame count");
  cmd_gc->add_option("--tolerance", gc.tolerance, "Max relative error accepted");

  std::string rt60_wav;
  CLI::App* cmd_rt60 = app.add_subcommand("rt60", "Reverberation time of an RIR WAV");
  cmd_rt60->add_option("wav", rt60_wav, "Impulse response WAV")->required();

  std::string dec_y, dec_x, dec_out;
  double dec_eps = 1e-8;
  CLI::App* cmd_dec = app.add_subcommand("deconvolve", "DFT-domain deconvolution");
  cmd_dec->add_option("--y", dec_y, "Reverberant WAV")->required();
  cmd_dec->add_option("--x", dec_x, "Dry WAV")->required();
  cmd_dec->add_option("--out", dec_out, "Output WAV")->required();
  cmd_dec->add_option("--eps-floor", dec_eps, "Regularization floor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (cmd_synth->parsed()) return run_synth(synth);
  if (cmd_est->parsed()) return run_estimate(est);
  if (cmd_eval->parsed()) return run_eval(ev);
  if (cmd_gc->parsed()) return run_grad_check(gc);
  if (cmd_rt60->parsed()) {
    rk_status st = RK_OK;
    WaveformPtr h = load_wav_or_null(rt60_wav, &st);
    if (st != RK_OK) return report(st);
    double seconds = 0.0;
    if ((st = rk_rt60(h.get(), &seconds)) != RK_OK) return report(st);
    std::printf("%.6f\n", seconds);
    return 0;
  }
  if (cmd_dec->parsed()) {
    rk_status st = RK_OK;
    WaveformPtr y = load_wav_or_null(dec_y, &st);
    if (st != RK_OK) return report(st);
    WaveformPtr x = load_wav_or_null(dec_x, &st);
    if (st != RK_OK) return report(st);
    rk_waveform* outp = nullptr;
    if ((st = rk_fourier_deconvolve(y.get(), x.get(), dec_eps, &outp)) != RK_OK) {
      return report(st);
    }
    WaveformPtr out(outp);
    if ((st = rk_waveform_write_wav(out.get(), dec_out.c_str())) != RK_OK) return report(st);
    std::cout << "wrote " << dec_out << "\n";
    return 0;
  }
  return 2;
}
