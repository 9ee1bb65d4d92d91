// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "decay.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "common.hpp"
#include "fft.hpp"

namespace rirkit {

Eigen::MatrixXd edr(const Eigen::MatrixXcd& bins) {
  if (bins.size() == 0) throw_validation("empty spectrogram");
  const int F = static_cast<int>(bins.rows());
  const int T = static_cast<int>(bins.cols());
  Eigen::MatrixXd out(F, T);
  for (int f = 0; f < F; ++f) {
    double acc = 0.0;
    for (int t = T - 1; t >= 0; --t) {
      acc += std::norm(bins(f, t));
      out(f, t) = acc;
    }
  }
  return out;
}

EnergyDecayRelief edr_db(const Eigen::MatrixXcd& bins, const std::vector<uint8_t>* flagged,
                         double threshold_db, double floor_db) {
  const Eigen::MatrixXd e = edr(bins);
  const int F = static_cast<int>(e.rows());
  const int T = static_cast<int>(e.cols());
  if (flagged && static_cast<int>(flagged->size()) != F) {
    throw_validation("flag vector length mismatch");
  }
  EnergyDecayRelief out;
  out.threshold_db = threshold_db;
  out.floor_db = floor_db;
  out.values_db.setConstant(F, T, floor_db);
  out.mask.setConstant(F, T, false);
  out.band_valid.assign(static_cast<size_t>(F), 0);
  int n_valid = 0;
  for (int f = 0; f < F; ++f) {
    const bool upstream_bad = flagged && (*flagged)[static_cast<size_t>(f)] != 0;
    if (upstream_bad || e(f, 0) <= 0.0) continue;
    out.band_valid[static_cast<size_t>(f)] = 1;
    ++n_valid;
    for (int t = 0; t < T; ++t) {
      if (e(f, t) > 0.0) {
        out.values_db(f, t) = std::max(10.0 * std::log10(e(f, t) / e(f, 0)), floor_db);
      }
      out.mask(f, t) = out.values_db(f, t) > threshold_db;
    }
  }
  if (n_valid == 0) throw_validation("no band carries energy");
  return out;
}

EnergyDecayRelief edr_db(const Spectrogram& s, double threshold_db) {
  return edr_db(s.bins, nullptr, threshold_db);
}

EnergyDecayRelief edr_db(const RirSpectrogramEstimate& e, double threshold_db) {
  return edr_db(e.bins, &e.flagged, threshold_db);
}

CoherenceStats coherence_stats(const EnergyDecayRelief& estimate,
                               const EnergyDecayRelief& target) {
  if (estimate.bands() != target.bands()) throw_validation("band count mismatch");
  const int F = estimate.bands();
  const int T = std::min(estimate.frames(), target.frames());
  CoherenceStats stats;
  for (int f = 0; f < F; ++f) {
    if (!estimate.band_valid[static_cast<size_t>(f)] ||
        !target.band_valid[static_cast<size_t>(f)]) {
      continue;
    }
    ++stats.bands_used;
    for (int t = 0; t < T; ++t) {
      if (!target.mask(f, t)) continue;
      const double d = estimate.values_db(f, t) - target.values_db(f, t);
      stats.sum += d * d;
      ++stats.count;
    }
  }
  if (stats.count == 0) throw_validation("no bin passes the decay mask");
  stats.mean = stats.sum / static_cast<double>(stats.count);
  return stats;
}

double coherence_loss(const EnergyDecayRelief& estimate, const EnergyDecayRelief& target) {
  return coherence_stats(estimate, target).sum;
}

EnergyDecayCurve edc_time(const Waveform& h, double floor_db) {
  if (h.size() == 0) throw_validation("empty waveform");
  const size_t n = h.size();
  std::vector<double> energy(n);
  double acc = 0.0;
  for (size_t i = n; i-- > 0;) {
    acc += h.samples[i] * h.samples[i];
    energy[i] = acc;
  }
  if (energy[0] <= 0.0) throw_validation("zero waveform");
  EnergyDecayCurve edc;
  edc.floor_db = floor_db;
  edc.values_db.resize(n);
  for (size_t i = 0; i < n; ++i) {
    edc.values_db[i] = energy[i] > 0.0
                           ? std::max(10.0 * std::log10(energy[i] / energy[0]), floor_db)
                           : floor_db;
  }
  return edc;
}

Waveform fourier_deconvolve(const Waveform& y, const Waveform& x, double eps_floor) {
  if (x.size() == 0 || y.size() == 0) throw_validation("empty waveform");
  if (x.size() > y.size()) throw_validation("deconvolution needs len(x) <= len(y)");
  if (x.sample_rate != y.sample_rate) throw_validation("sample rate mismatch");
  if (!(eps_floor >= 0.0) || !std::isfinite(eps_floor)) {
    throw_validation("eps_floor must be finite and >= 0");
  }

  const size_t n = next_pow2(y.size());
  const size_t nb = n / 2 + 1;
  std::vector<double> xpad(n, 0.0), ypad(n, 0.0);
  std::copy(x.samples.begin(), x.samples.end(), xpad.begin());
  std::copy(y.samples.begin(), y.samples.end(), ypad.begin());
  std::vector<std::complex<double>> X(nb), Y(nb);
  real_fft(xpad.data(), n, X.data());
  real_fft(ypad.data(), n, Y.data());

  double max_mag = 0.0;
  for (const auto& v : X) max_mag = std::max(max_mag, std::abs(v));
  if (max_mag == 0.0) throw_validation("deconvolution against an all-zero signal");
  const double eps = eps_floor * max_mag;

  std::vector<std::complex<double>> H(nb);
  for (size_t k = 0; k < nb; ++k) {
    const double mag = std::abs(X[k]);
    if (mag >= eps && mag > 0.0) {
      H[k] = Y[k] / X[k];
    } else if (eps > 0.0) {
      H[k] = std::conj(X[k]) * Y[k] / (mag * mag + eps * eps);
    } else {
      throw_numeric("zero DFT bin in divisor with eps_floor = 0");
    }
  }

  std::vector<double> full(n);
  real_ifft(H.data(), n, full.data());
  Waveform out;
  out.sample_rate = y.sample_rate;
  out.samples.assign(full.begin(),
                     full.begin() + static_cast<long>(y.size() - x.size() + 1));
  return out;
}

double rt60_from_edc(const EnergyDecayCurve& edc, int sample_rate) {
  if (sample_rate <= 0) throw_validation("sample_rate must be positive");
  const auto& v = edc.values_db;
  if (v.empty()) throw_validation("empty decay curve");
  size_t n5 = v.size(), n25 = v.size();
  for (size_t i = 0; i < v.size(); ++i) {
    if (n5 == v.size() && v[i] <= -5.0) n5 = i;
    if (v[i] <= -25.0) {
      n25 = i;
      break;
    }
  }
  if (n25 == v.size()) throw_validation("decay never reaches -25 dB");
  if (n25 <= n5 + 1) throw_numeric("decay span too short for a slope fit");

  // Least-squares line v = a + b n over [n5, n25].
  double sn = 0.0, sv = 0.0, snn = 0.0, snv = 0.0;
  const double count = static_cast<double>(n25 - n5 + 1);
  for (size_t i = n5; i <= n25; ++i) {
    const double ni = static_cast<double>(i);
    sn += ni;
    sv += v[i];
    snn += ni * ni;
    snv += ni * v[i];
  }
  const double denom = count * snn - sn * sn;
  if (denom <= 0.0) throw_numeric("degenerate decay fit");
  const double slope_per_sample = (count * snv - sn * sv) / denom;
  const double slope_db_per_s = slope_per_sample * static_cast<double>(sample_rate);
  if (!(slope_db_per_s < 0.0)) throw_numeric("nondecaying energy curve");
  return -60.0 / slope_db_per_s;
}

double metric_edc_fourier(const Waveform& y, const Waveform& x, const Waveform& h,
                          double eps_floor) {
  const Waveform hhat = fourier_deconvolve(y, x, eps_floor);
  const EnergyDecayCurve ref = edc_time(h);
  const EnergyDecayCurve est = edc_time(hhat);
  const size_t n = std::min(ref.values_db.size(), est.values_db.size());
  double sum = 0.0;
  long count = 0;
  for (size_t i = 0; i < n; ++i) {
    if (ref.values_db[i] <= kMaskThresholdDb) continue;
    const double d = est.values_db[i] - ref.values_db[i];
    sum += d * d;
    ++count;
  }
  if (count == 0) throw_validation("no sample passes the decay mask");
  return sum / static_cast<double>(count);
}

double metric_edr_subband(const Spectrogram& X, const Spectrogram& Y, const Spectrogram& H,
                          CtfConfig cfg) {
  cfg.crossbands = 0;
  const CtfFilterBank bank = estimate_ctf(X, Y, cfg);
  return coherence_loss(edr_db(rir_estimate(bank)), edr_db(H));
}

double metric_edr_crossband(const Spectrogram& X, const Spectrogram& Y, const Spectrogram& H,
                            CtfConfig cfg) {
  cfg.crossbands = 1;
  const CtfFilterBank bank = estimate_ctf(X, Y, cfg);
  return coherence_loss(edr_db(rir_estimate(bank)), edr_db(H));
}

}  // namespace rirkit
