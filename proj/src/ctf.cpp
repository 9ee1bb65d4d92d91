// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ctf.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "common.hpp"

namespace rirkit {

void CtfConfig::validate() const {
  if (crossbands < 0) throw_validation("crossbands must be >= 0");
  if (filter_len < 1) throw_validation("filter_len must be >= 1");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw_validation("ridge must be finite and >= 0");
}

int default_filter_len(size_t rir_len, const StftConfig& cfg) {
  cfg.validate();
  return static_cast<int>((rir_len + static_cast<size_t>(cfg.win_len) +
                           static_cast<size_t>(cfg.hop) - 1) /
                          static_cast<size_t>(cfg.hop));
}

void check_rank_condition(const CtfConfig& cfg, int frames_y) {
  cfg.validate();
  const long cols = static_cast<long>(2 * cfg.crossbands + 1) * cfg.filter_len;
  if (cols >= frames_y) {
    throw_validation("underdetermined system: (2*crossbands+1)*filter_len = " +
                     std::to_string(cols) + " must be < frames_y = " + std::to_string(frames_y) +
                     "; use a longer signal or a shorter filter");
  }
}

Eigen::MatrixXcd build_toeplitz(const Spectrogram& X, int band, int filter_len, int frames_out) {
  if (band < 0 || band >= X.bands()) throw_validation("band index out of range");
  if (filter_len < 1) throw_validation("filter_len must be >= 1");
  if (frames_out < 1) throw_validation("frames_out must be >= 1");
  const int frames_x = X.frames();
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(frames_out, filter_len);
  for (int t = 0; t < frames_out; ++t) {
    for (int tp = 0; tp < filter_len; ++tp) {
      const int src = t - tp;
      if (src >= 0 && src < frames_x) M(t, tp) = X.bins(band, src);
    }
  }
  return M;
}

Eigen::MatrixXcd stack_crossbands(const Spectrogram& X, int band, const CtfConfig& cfg,
                                  int frames_out, int* valid_lo, int* valid_hi) {
  cfg.validate();
  const int F = X.bands();
  if (band < 0 || band >= F) throw_validation("band index out of range");
  const int lo = std::max(0, band - cfg.crossbands);
  const int hi = std::min(F - 1, band + cfg.crossbands);
  if (valid_lo) *valid_lo = lo;
  if (valid_hi) *valid_hi = hi;
  Eigen::MatrixXcd A(frames_out, static_cast<long>(hi - lo + 1) * cfg.filter_len);
  for (int fp = lo; fp <= hi; ++fp) {
    A.middleCols(static_cast<long>(fp - lo) * cfg.filter_len, cfg.filter_len) =
        build_toeplitz(X, fp, cfg.filter_len, frames_out);
  }
  return A;
}

CtfFilterBank estimate_ctf(const Spectrogram& X, const Spectrogram& Y, const CtfConfig& cfg) {
  cfg.validate();
  if (!(X.config == Y.config)) throw_validation("dry and wet spectrograms use different analysis settings");
  const int F = X.bands();
  if (F != Y.bands()) throw_validation("band count mismatch");
  const int frames_y = Y.frames();
  check_rank_condition(cfg, frames_y);

  CtfFilterBank bank;
  bank.config = cfg;
  bank.stft_config = X.config;
  bank.filters.resize(F);
  bank.flagged.assign(F, 0);

  const int width = 2 * cfg.crossbands + 1;
  for (int f = 0; f < F; ++f) {
    int lo = 0, hi = 0;
    Eigen::MatrixXcd A = stack_crossbands(X, f, cfg, frames_y, &lo, &hi);
    Eigen::VectorXcd b = Y.bins.row(f).transpose();
    if (cfg.ridge > 0.0) {
      const long k = A.cols();
      Eigen::MatrixXcd Aa(A.rows() + k, k);
      Aa.topRows(A.rows()) = A;
      Aa.bottomRows(k) = std::sqrt(cfg.ridge) * Eigen::MatrixXcd::Identity(k, k);
      Eigen::VectorXcd ba = Eigen::VectorXcd::Zero(A.rows() + k);
      ba.head(A.rows()) = b;
      A.swap(Aa);
      b.swap(ba);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(A);
    Eigen::VectorXcd c;
    if (qr.rank() < A.cols()) {
      bank.flagged[f] = 1;
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(A);
      c = cod.solve(b);
    } else {
      c = qr.solve(b);
    }

    Eigen::MatrixXcd filt = Eigen::MatrixXcd::Zero(width, cfg.filter_len);
    for (int fp = lo; fp <= hi; ++fp) {
      filt.row(fp - f + cfg.crossbands) =
          c.segment(static_cast<long>(fp - lo) * cfg.filter_len, cfg.filter_len).transpose();
    }
    bank.filters[f] = std::move(filt);
  }
  return bank;
}

Spectrogram apply_ctf(const CtfFilterBank& bank, const Spectrogram& X, int frames_out) {
  if (!(bank.stft_config == X.config)) throw_validation("filter bank and spectrogram use different analysis settings");
  const int F = X.bands();
  if (F != bank.bands()) throw_validation("band count mismatch");
  const CtfConfig& cfg = bank.config;
  const int frames_x = X.frames();
  if (frames_out < 0) frames_out = frames_x + cfg.filter_len - 1;
  if (frames_out < 1) throw_validation("frames_out must be >= 1");

  Spectrogram out;
  out.config = X.config;
  out.orig_length = 0;
  out.bins = Eigen::MatrixXcd::Zero(F, frames_out);
  for (int f = 0; f < F; ++f) {
    const int lo = std::max(0, f - cfg.crossbands);
    const int hi = std::min(F - 1, f + cfg.crossbands);
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(frames_out);
    for (int fp = lo; fp <= hi; ++fp) {
      acc += build_toeplitz(X, fp, cfg.filter_len, frames_out) *
             bank.filters[f].row(fp - f + cfg.crossbands).transpose();
    }
    out.bins.row(f) = acc.transpose();
  }
  return out;
}

std::vector<double> ls_residual(const Spectrogram& X, const Spectrogram& Y,
                                const CtfFilterBank& bank) {
  if (!(bank.stft_config == X.config) || !(X.config == Y.config)) {
    throw_validation("mismatched analysis settings");
  }
  if (X.bands() != bank.bands() || Y.bands() != bank.bands()) {
    throw_validation("band count mismatch");
  }
  Spectrogram yhat = apply_ctf(bank, X, Y.frames());
  std::vector<double> out(static_cast<size_t>(bank.bands()));
  for (int f = 0; f < bank.bands(); ++f) {
    out[static_cast<size_t>(f)] = (yhat.bins.row(f) - Y.bins.row(f)).norm();
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'R', 'K', 'C', 'B'};
constexpr uint32_t kVersion = 1;

void wr_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t rd_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void wr_f64(std::ostream& os, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double rd_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void save_bank(const CtfFilterBank& bank, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw_io("cannot open for writing: " + path.string());
  os.write(kMagic, 4);
  wr_u32(os, kVersion);
  wr_u32(os, static_cast<uint32_t>(bank.bands()));
  wr_u32(os, static_cast<uint32_t>(bank.config.crossbands));
  wr_u32(os, static_cast<uint32_t>(bank.config.filter_len));
  wr_u32(os, static_cast<uint32_t>(bank.stft_config.win_len));
  wr_u32(os, static_cast<uint32_t>(bank.stft_config.hop));
  wr_u32(os, static_cast<uint32_t>(bank.stft_config.fft_len));
  wr_u32(os, bank.stft_config.centered ? 1u : 0u);
  for (int f = 0; f < bank.bands(); ++f) {
    os.put(static_cast<char>(bank.flagged[static_cast<size_t>(f)]));
  }
  const int width = 2 * bank.config.crossbands + 1;
  for (int f = 0; f < bank.bands(); ++f) {
    const Eigen::MatrixXcd& filt = bank.filters[static_cast<size_t>(f)];
    if (filt.rows() != width || filt.cols() != bank.config.filter_len) {
      throw_validation("inconsistent filter bank shape");
    }
    for (int j = 0; j < width; ++j) {
      for (int t = 0; t < bank.config.filter_len; ++t) {
        wr_f64(os, filt(j, t).real());
        wr_f64(os, filt(j, t).imag());
      }
    }
  }
  if (!os) throw_io("write failed: " + path.string());
}

CtfFilterBank load_bank(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_io("cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw_io("not a filter bank file: " + path.string());
  const uint32_t version = rd_u32(is);
  if (version != kVersion) throw_io("unsupported filter bank version");
  const uint32_t F = rd_u32(is);
  const uint32_t crossbands = rd_u32(is);
  const uint32_t filter_len = rd_u32(is);
  const uint32_t win_len = rd_u32(is);
  const uint32_t hop = rd_u32(is);
  const uint32_t fft_len = rd_u32(is);
  const uint32_t centered = rd_u32(is);
  if (!is || F == 0 || F > (1u << 24) || crossbands > (1u << 16) || filter_len == 0 ||
      filter_len > (1u << 24) || win_len == 0 || hop == 0 || fft_len == 0 || centered > 1) {
    throw_io("corrupt filter bank header");
  }
  if (F != fft_len / 2 + 1) throw_io("corrupt filter bank header");
  CtfFilterBank bank;
  bank.config.crossbands = static_cast<int>(crossbands);
  bank.config.filter_len = static_cast<int>(filter_len);
  bank.stft_config.win_len = static_cast<int>(win_len);
  bank.stft_config.hop = static_cast<int>(hop);
  bank.stft_config.fft_len = static_cast<int>(fft_len);
  bank.stft_config.centered = centered != 0;
  bank.flagged.resize(F);
  for (uint32_t f = 0; f < F; ++f) {
    int ch = is.get();
    if (ch < 0) throw_io("truncated filter bank file");
    bank.flagged[f] = static_cast<uint8_t>(ch);
  }
  const int width = 2 * static_cast<int>(crossbands) + 1;
  bank.filters.resize(F);
  for (uint32_t f = 0; f < F; ++f) {
    Eigen::MatrixXcd filt(width, static_cast<int>(filter_len));
    for (int j = 0; j < width; ++j) {
      for (uint32_t t = 0; t < filter_len; ++t) {
        const double re = rd_f64(is);
        const double im = rd_f64(is);
        filt(j, static_cast<int>(t)) = std::complex<double>(re, im);
      }
    }
    bank.filters[f] = std::move(filt);
  }
  if (!is) throw_io("truncated filter bank file");
  return bank;
}

void save_bank_csv(const CtfFilterBank& bank, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw_io("cannot open for writing: " + path.string());
  os << "f,f_prime,t,re,im\n";
  char buf[64];
  const int F = bank.bands();
  for (int f = 0; f < F; ++f) {
    const int lo = std::max(0, f - bank.config.crossbands);
    const int hi = std::min(F - 1, f + bank.config.crossbands);
    for (int fp = lo; fp <= hi; ++fp) {
      for (int t = 0; t < bank.config.filter_len; ++t) {
        const std::complex<double> v = bank.filters[static_cast<size_t>(f)](
            fp - f + bank.config.crossbands, t);
        os << f << ',' << fp << ',' << t << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", v.real());
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", v.imag());
        os << buf << '\n';
      }
    }
  }
  if (!os) throw_io("write failed: " + path.string());
}

}  // namespace rirkit
