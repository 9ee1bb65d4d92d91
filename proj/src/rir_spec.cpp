// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rir_spec.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "common.hpp"

namespace rirkit {

RirSpectrogramEstimate rir_estimate(const CtfFilterBank& bank, RirSource source) {
  const int F = bank.bands();
  if (F == 0) throw_validation("empty filter bank");
  const int Th = bank.config.filter_len;
  const int Fp = bank.config.crossbands;

  RirSpectrogramEstimate out;
  out.source = source;
  out.stft_config = bank.stft_config;
  out.flagged = bank.flagged;
  out.bins = Eigen::MatrixXcd::Zero(F, Th);
  for (int f = 0; f < F; ++f) {
    const int lo = std::max(0, f - Fp);
    const int hi = std::min(F - 1, f + Fp);
    for (int fp = lo; fp <= hi; ++fp) {
      const double sign = (fp % 2 == 0) ? 1.0 : -1.0;
      out.bins.row(f) += sign * bank.filters[static_cast<size_t>(f)].row(fp - f + Fp);
    }
  }
  return out;
}

ModelingError modeling_error(const RirSpectrogramEstimate& oracle, const Spectrogram& H) {
  if (oracle.bands() != H.bands()) throw_validation("band count mismatch");
  const int F = oracle.bands();
  const int Th = oracle.frames();
  const int Th_ref = H.frames();
  ModelingError err;
  err.magnitudes.resize(F, Th);
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < Th; ++t) {
      const std::complex<double> href = t < Th_ref ? H.bins(f, t) : std::complex<double>(0.0);
      err.magnitudes(f, t) = std::abs(oracle.bins(f, t) - href);
    }
  }
  return err;
}

RirSpectrogramEstimate spectral_subtraction(const RirSpectrogramEstimate& I,
                                            const ModelingError& E) {
  if (I.bins.rows() != E.magnitudes.rows() || I.bins.cols() != E.magnitudes.cols()) {
    throw_validation("estimate and modeling error shapes differ");
  }
  RirSpectrogramEstimate out = I;
  out.corrected = true;
  for (int f = 0; f < I.bands(); ++f) {
    for (int t = 0; t < I.frames(); ++t) {
      const std::complex<double> v = I.bins(f, t);
      const double mag = std::abs(v);
      const double err = E.magnitudes(f, t);
      const double corrected = std::sqrt(std::max(mag * mag - err * err, 0.0));
      // e^{j arg v}: unit phasor, kept even where the magnitude clamps to 0.
      const std::complex<double> phase =
          mag > 0.0 ? v / mag : std::complex<double>(1.0, 0.0);
      out.bins(f, t) = corrected * phase;
    }
  }
  return out;
}

void save_rir_spec_csv(const RirSpectrogramEstimate& I, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw_io("cannot open for writing: " + path.string());
  os << "f,t,mag_db,phase_rad\n";
  char buf[64];
  for (int f = 0; f < I.bands(); ++f) {
    for (int t = 0; t < I.frames(); ++t) {
      const double mag = std::abs(I.bins(f, t));
      const double db = mag > 0.0 ? std::max(20.0 * std::log10(mag), -300.0) : -300.0;
      const double phase = std::arg(I.bins(f, t));
      os << f << ',' << t << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", db);
      os << buf << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", phase);
      os << buf << '\n';
    }
  }
  if (!os) throw_io("write failed: " + path.string());
}

}  // namespace rirkit
