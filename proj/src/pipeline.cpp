// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include "rir_spec.hpp"
#include "rng.hpp"
#include "wav.hpp"

namespace rirkit {

namespace {

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Run fn(i) for i in [0, n) across up to `jobs` threads; the first thrown
// exception is rethrown on the caller after all workers finish.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::exception_ptr first_error;
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

Waveform make_excitation(const RunConfig& cfg, uint64_t seed) {
  const size_t n =
      static_cast<size_t>(std::lround(cfg.excitation_seconds * cfg.sample_rate));
  Waveform x;
  x.sample_rate = cfg.sample_rate;
  x.samples.resize(n);
  Rng rng(seed);
  if (cfg.excitation == "white") {
    for (double& v : x.samples) v = 0.3 * rng.gaussian();
    return x;
  }
  if (cfg.excitation == "colored") {
    double state = 0.0;
    double energy = 0.0;
    for (double& v : x.samples) {
      state = 0.9 * state + rng.gaussian();
      v = state;
      energy += v * v;
    }
    const double rms = std::sqrt(energy / static_cast<double>(n));
    for (double& v : x.samples) v = 0.3 * v / rms;
    return x;
  }
  // chirp: three summed linear sweeps covering the band
  const double fs = cfg.sample_rate;
  for (int j = 0; j < 3; ++j) {
    const double f0 = rng.uniform(50.0, 400.0);
    const double f1 = rng.uniform(0.3 * fs, 0.48 * fs);
    const double phase0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double rate = (f1 - f0) / cfg.excitation_seconds;
    for (size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      x.samples[i] +=
          0.1 * std::sin(phase0 + 2.0 * std::numbers::pi * (f0 * t + 0.5 * rate * t * t));
    }
  }
  return x;
}

std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir) {
  std::error_code ec;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      files.push_back(entry.path());
    }
  }
  if (ec) throw_io("cannot read dry-source directory: " + dir.string());
  if (files.empty()) throw_io("no .wav files in dry-source directory: " + dir.string());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

void RunConfig::validate() const {
  stft.validate();
  if (ctf.crossbands < 0) throw_validation("crossbands must be >= 0");
  if (ctf.filter_len < 0) throw_validation("filter_len must be >= 0");
  if (!(ctf.ridge >= 0.0)) throw_validation("ridge must be >= 0");
  regime.validate();
  if (!(mask_threshold_db < 0.0)) throw_validation("mask threshold must be negative");
  if (!(w_phi > 0.0)) throw_validation("w_phi must be positive");
  if (!(eps_floor >= 0.0)) throw_validation("eps_floor must be >= 0");
  if (excitation != "white" && excitation != "colored" && excitation != "chirp") {
    throw_validation("excitation must be white, colored, or chirp");
  }
  if (!(excitation_seconds > 0.0)) throw_validation("excitation length must be positive");
  if (sample_rate <= 0) throw_validation("sample_rate must be positive");
  if (jobs < 1) throw_validation("jobs must be >= 1");
}

std::vector<ManifestItem> synth_dataset(const RunConfig& cfg, int count,
                                        const std::filesystem::path& out_dir) {
  cfg.validate();
  if (count < 0) throw_validation("count must be >= 0");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw_io("cannot create output directory: " + out_dir.string());

  const int mics = cfg.regime.mics_per_room;
  const int rooms = (count + mics - 1) / mics;
  std::vector<RoomDraw> draws(static_cast<size_t>(rooms));
  for (int k = 0; k < rooms; ++k) {
    draws[static_cast<size_t>(k)] = sample_room_draw(cfg.regime, mix_seed(cfg.seed, static_cast<uint64_t>(k)));
  }
  std::vector<std::filesystem::path> dry_files;
  if (!cfg.dry_dir.empty()) dry_files = list_wavs(cfg.dry_dir);

  std::vector<ManifestItem> items(static_cast<size_t>(count));
  parallel_for(count, cfg.jobs, [&](int idx) {
    const int k = idx / mics;
    const int m = idx % mics;
    const uint64_t room_seed = mix_seed(cfg.seed, static_cast<uint64_t>(k));
    const uint64_t item_seed = mix_seed(room_seed, 0x9e3779b9u + static_cast<uint64_t>(m));

    const RoomSpec spec = spec_for_mic(draws[static_cast<size_t>(k)], m, cfg.sample_rate);
    const Waveform h = align_direct_path(synth_rir_ism(spec));
    const double rt60_measured = rt60_from_edc(edc_time(h), cfg.sample_rate);

    Waveform x;
    if (dry_files.empty()) {
      x = make_excitation(cfg, mix_seed(item_seed, 7));
    } else {
      x = read_wav(dry_files[static_cast<size_t>(idx) % dry_files.size()]);
      if (x.sample_rate != cfg.sample_rate) {
        throw_validation("dry-source sample rate does not match the configured rate");
      }
    }

    const Waveform y = convolve(x, h);

    char id[32];
    std::snprintf(id, sizeof(id), "item_%05d", idx);
    ManifestItem item;
    item.item_id = id;
    item.seed = item_seed;
    item.regime = cfg.regime_name;
    item.dims = spec.dims;
    item.rt60_target = spec.rt60_target;
    item.rt60_measured = rt60_measured;
    item.source = spec.source_pos;
    item.mic = spec.mic_pos;
    item.x_path = std::string(id) + "_x.wav";
    item.h_path = std::string(id) + "_h.wav";
    item.y_path = std::string(id) + "_y.wav";
    write_wav(out_dir / item.x_path, x);
    write_wav(out_dir / item.h_path, h);
    write_wav(out_dir / item.y_path, y);
    items[static_cast<size_t>(idx)] = std::move(item);
  });

  save_manifest(items, out_dir / "manifest.csv");
  return items;
}

void save_manifest(const std::vector<ManifestItem>& items, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw_io("cannot open for writing: " + path.string());
  os << "item_id,seed,regime,dim_x,dim_y,dim_z,rt60_target,rt60_measured,"
        "src_x,src_y,src_z,mic_x,mic_y,mic_z,x_path,h_path,y_path\n";
  for (const auto& it : items) {
    os << it.item_id << ',' << it.seed << ',' << it.regime << ',' << fmt_g(it.dims[0]) << ','
       << fmt_g(it.dims[1]) << ',' << fmt_g(it.dims[2]) << ',' << fmt_g(it.rt60_target) << ','
       << fmt_g(it.rt60_measured) << ',' << fmt_g(it.source[0]) << ',' << fmt_g(it.source[1])
       << ',' << fmt_g(it.source[2]) << ',' << fmt_g(it.mic[0]) << ',' << fmt_g(it.mic[1])
       << ',' << fmt_g(it.mic[2]) << ',' << it.x_path << ',' << it.h_path << ',' << it.y_path
       << '\n';
  }
  if (!os) throw_io("write failed: " + path.string());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw_io("malformed number in manifest: " + path.string());
  }
}

}  // namespace

std::vector<ManifestItem> load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw_io("cannot open manifest: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw_io("empty manifest: " + path.string());
  const auto header = split_csv_line(line);
  if (header.size() != 17 || header[0] != "item_id") {
    throw_io("unrecognized manifest header: " + path.string());
  }
  std::vector<ManifestItem> items;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 17) throw_io("malformed manifest row: " + path.string());
    ManifestItem it;
    it.item_id = f[0];
    try {
      it.seed = std::stoull(f[1]);
    } catch (const std::exception&) {
      throw_io("malformed seed in manifest: " + path.string());
    }
    it.regime = f[2];
    for (int i = 0; i < 3; ++i) it.dims[static_cast<size_t>(i)] = parse_double(f[static_cast<size_t>(3 + i)], path);
    it.rt60_target = parse_double(f[6], path);
    it.rt60_measured = parse_double(f[7], path);
    for (int i = 0; i < 3; ++i) it.source[static_cast<size_t>(i)] = parse_double(f[static_cast<size_t>(8 + i)], path);
    for (int i = 0; i < 3; ++i) it.mic[static_cast<size_t>(i)] = parse_double(f[static_cast<size_t>(11 + i)], path);
    it.x_path = f[14];
    it.h_path = f[15];
    it.y_path = f[16];
    items.push_back(std::move(it));
  }
  return items;
}

std::vector<EvalRow> eval_manifest(const RunConfig& cfg,
                                   const std::vector<ManifestItem>& items,
                                   const std::filesystem::path& manifest_dir,
                                   const std::vector<std::string>& variants,
                                   const std::optional<std::filesystem::path>& estimate_dir) {
  cfg.validate();
  if (variants.empty()) throw_validation("no evaluation variant requested");
  for (const auto& v : variants) {
    if (std::find(kEvalVariants.begin(), kEvalVariants.end(), v) == kEvalVariants.end()) {
      throw_validation("unknown variant: " + v);
    }
  }
  const bool want_sb = std::find(variants.begin(), variants.end(), "SB") != variants.end();
  const bool want_ssb = std::find(variants.begin(), variants.end(), "SSB") != variants.end();
  const bool want_csb = std::find(variants.begin(), variants.end(), "CSB") != variants.end();
  const bool want_3b = std::find(variants.begin(), variants.end(), "3B") != variants.end();
  const bool want_edc =
      std::find(variants.begin(), variants.end(), "EDC-Fourier") != variants.end();

  std::vector<std::vector<EvalRow>> groups(items.size());
  parallel_for(static_cast<int>(items.size()), cfg.jobs, [&](int i) {
    const ManifestItem& it = items[static_cast<size_t>(i)];
    const Waveform x = read_wav(manifest_dir / it.x_path);
    const Waveform h = read_wav(manifest_dir / it.h_path);
    const Waveform y = read_wav(manifest_dir / it.y_path);
    const bool have_estimate = estimate_dir.has_value();
    const Waveform xhat =
        have_estimate ? read_wav(*estimate_dir / (it.item_id + "_xhat.wav")) : x;

    std::map<std::string, std::pair<double, double>> values;

    const int Th = cfg.ctf.filter_len > 0
                       ? cfg.ctf.filter_len
                       : default_filter_len(h.size(), cfg.stft);
    CtfConfig sub = cfg.ctf;
    sub.crossbands = 0;
    sub.filter_len = Th;

    std::optional<Spectrogram> X, Xhat, Y, H;
    std::optional<CtfFilterBank> bank_hat0, bank_or0;
    auto need_spectra = [&] {
      if (!Y) {
        Y = stft(y, cfg.stft);
        H = stft(h, cfg.stft);
        X.emplace(stft(x, cfg.stft));
        Xhat = have_estimate ? stft(xhat, cfg.stft) : *X;
      }
    };
    auto need_sub_banks = [&](bool need_oracle) {
      need_spectra();
      if (!bank_hat0) bank_hat0 = estimate_ctf(*Xhat, *Y, sub);
      if (need_oracle && !bank_or0) {
        bank_or0 = have_estimate ? estimate_ctf(*X, *Y, sub) : *bank_hat0;
      }
    };

    if (want_sb) {
      need_sub_banks(false);
      const auto stats = coherence_stats(
          edr_db(rir_estimate(*bank_hat0), cfg.mask_threshold_db),
          edr_db(*H, cfg.mask_threshold_db));
      values["SB"] = {stats.sum, stats.mean};
    }
    if (want_ssb) {
      need_sub_banks(true);
      const auto stats = coherence_stats(
          edr_db(rir_estimate(*bank_hat0), cfg.mask_threshold_db),
          edr_db(rir_estimate(*bank_or0), cfg.mask_threshold_db));
      values["SSB"] = {stats.sum, stats.mean};
    }
    if (want_csb) {
      need_sub_banks(true);
      const RirSpectrogramEstimate i_hat = rir_estimate(*bank_hat0);
      const RirSpectrogramEstimate i_or =
          rir_estimate(*bank_or0, RirSource::from_dry_oracle);
      const ModelingError err = modeling_error(i_or, *H);
      const auto stats = coherence_stats(
          edr_db(spectral_subtraction(i_hat, err), cfg.mask_threshold_db),
          edr_db(spectral_subtraction(i_or, err), cfg.mask_threshold_db));
      values["CSB"] = {stats.sum, stats.mean};
    }
    if (want_3b) {
      need_spectra();
      CtfConfig tri = sub;
      tri.crossbands = 1;
      const auto stats = coherence_stats(
          edr_db(rir_estimate(estimate_ctf(*Xhat, *Y, tri)), cfg.mask_threshold_db),
          edr_db(*H, cfg.mask_threshold_db));
      values["3B"] = {stats.sum, stats.mean};
    }
    if (want_edc) {
      const double v = metric_edc_fourier(y, xhat, h, cfg.eps_floor);
      values["EDC-Fourier"] = {v, v};
    }

    std::vector<EvalRow>& rows = groups[static_cast<size_t>(i)];
    for (const auto& variant : variants) {
      const auto& [value, mean] = values.at(variant);
      rows.push_back({it.item_id, variant, value, mean});
    }
  });

  std::vector<EvalRow> out;
  for (auto& g : groups) {
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

void save_eval_csv(const std::vector<EvalRow>& rows, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw_io("cannot open for writing: " + path.string());
  os << "item_id,metric,value,masked_mean\n";
  for (const auto& r : rows) {
    os << r.item_id << ',' << r.metric << ',' << fmt_g(r.value) << ',' << fmt_g(r.masked_mean)
       << '\n';
  }
  // Summary block in first-appearance metric order, mean then std per metric.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const EvalRow*>> by_metric;
  for (const auto& r : rows) {
    if (!by_metric.count(r.metric)) order.push_back(r.metric);
    by_metric[r.metric].push_back(&r);
  }
  for (const auto& metric : order) {
    const auto& rs = by_metric[metric];
    const double n = static_cast<double>(rs.size());
    double mv = 0.0, mm = 0.0;
    for (const auto* r : rs) {
      mv += r->value;
      mm += r->masked_mean;
    }
    mv /= n;
    mm /= n;
    double sv = 0.0, sm = 0.0;
    if (rs.size() > 1) {
      for (const auto* r : rs) {
        sv += (r->value - mv) * (r->value - mv);
        sm += (r->masked_mean - mm) * (r->masked_mean - mm);
      }
      sv = std::sqrt(sv / (n - 1.0));
      sm = std::sqrt(sm / (n - 1.0));
    }
    os << "mean," << metric << ',' << fmt_g(mv) << ',' << fmt_g(mm) << '\n';
    os << "std," << metric << ',' << fmt_g(sv) << ',' << fmt_g(sm) << '\n';
  }
  if (!os) throw_io("write failed: " + path.string());
}

GradCheckReport grad_check(uint64_t seed, int trials, int coords_per_trial, double fd_step,
                           int filter_len, int frames) {
  if (trials < 0 || coords_per_trial < 1) throw_validation("bad gradient-check size");
  if (!(fd_step > 0.0)) throw_validation("fd_step must be positive");

  StftConfig small;
  small.win_len = 16;
  small.hop = 8;
  small.fft_len = 16;
  const int F = small.bands();  // 9
  const int T = frames;
  const int Th = filter_len;
  CtfConfig cfg;
  cfg.crossbands = 0;
  cfg.filter_len = Th;
  check_rank_condition(cfg, T);

  GradCheckReport report;
  report.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(mix_seed(seed, static_cast<uint64_t>(trial)));
    auto random_spec = [&](int frames, double decay_db_per_frame) {
      Spectrogram s;
      s.config = small;
      s.orig_length = 0;
      s.bins.resize(F, frames);
      for (int f = 0; f < F; ++f) {
        for (int t = 0; t < frames; ++t) {
          const double scale = std::pow(10.0, -decay_db_per_frame * t / 20.0);
          s.bins(f, t) = scale * std::complex<double>(rng.gaussian(), rng.gaussian());
        }
      }
      return s;
    };
    Spectrogram Xh = random_spec(T, 0.0);
    const Spectrogram Y = random_spec(T, 0.0);
    const EnergyDecayRelief target = edr_db(random_spec(Th, 8.0));

    const LossGradient an = coherence_loss_grad(Xh, Y, target, cfg);
    auto forward = [&]() {
      return coherence_stats(edr_db(rir_estimate(estimate_ctf(Xh, Y, cfg))), target).sum;
    };

    for (int c = 0; c < coords_per_trial; ++c) {
      const int f = static_cast<int>(rng.uniform01() * F) % F;
      const int t = static_cast<int>(rng.uniform01() * T) % T;
      const bool imag = rng.uniform01() < 0.5;
      const std::complex<double> delta =
          imag ? std::complex<double>(0.0, fd_step) : std::complex<double>(fd_step, 0.0);
      const std::complex<double> orig = Xh.bins(f, t);
      Xh.bins(f, t) = orig + delta;
      const double lp = forward();
      Xh.bins(f, t) = orig - delta;
      const double lm = forward();
      Xh.bins(f, t) = orig;
      const double fd = (lp - lm) / (2.0 * fd_step);
      const double av = imag ? an.d_im(f, t) : an.d_re(f, t);
      const double rel = std::abs(fd - av) / std::max({std::abs(fd), std::abs(av), 1e-6});
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.coords;
    }
  }
  return report;
}

}  // namespace rirkit
