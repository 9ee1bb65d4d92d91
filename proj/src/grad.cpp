// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "grad.hpp"

#include <cmath>
#include <complex>

#include "common.hpp"

namespace rirkit {

namespace {
constexpr double kDbScale = 10.0 / 2.302585092994045684;  // 10 / ln 10
}

LossGradient coherence_loss_grad(const Spectrogram& X_hat, const Spectrogram& Y,
                                 const EnergyDecayRelief& target, const CtfConfig& cfg) {
  cfg.validate();
  if (!(X_hat.config == Y.config)) {
    throw_validation("dry and wet spectrograms use different analysis settings");
  }
  const int F = X_hat.bands();
  if (F != Y.bands() || F != target.bands()) throw_validation("band count mismatch");
  const int T_y = Y.frames();
  check_rank_condition(cfg, T_y);

  const int T_x = X_hat.frames();
  const int Th = cfg.filter_len;
  const int T_c = std::min(Th, target.frames());

  LossGradient out;
  out.d_re = Eigen::MatrixXd::Zero(F, T_x);
  out.d_im = Eigen::MatrixXd::Zero(F, T_x);

  for (int f = 0; f < F; ++f) {
    if (!target.band_valid[static_cast<size_t>(f)]) continue;

    int lo = 0, hi = 0;
    Eigen::MatrixXcd A = stack_crossbands(X_hat, f, cfg, T_y, &lo, &hi);
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
    const long K = A.cols();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(A);
    if (qr.rank() < K) continue;  // degenerate solve: band excluded

    const Eigen::VectorXcd c = qr.solve(b);
    const Eigen::VectorXcd r = b - A * c;

    // RIR spectrogram row: I_t = sum_j sign(f'_j) c[j Th + t].
    Eigen::VectorXcd I = Eigen::VectorXcd::Zero(Th);
    for (int fp = lo; fp <= hi; ++fp) {
      const double sign = (fp % 2 == 0) ? 1.0 : -1.0;
      I += sign * c.segment(static_cast<long>(fp - lo) * Th, Th);
    }

    // Backward cumulative energy and the dB curve, matching edr_db.
    Eigen::VectorXd E(Th);
    {
      double acc = 0.0;
      for (int t = Th - 1; t >= 0; --t) {
        acc += std::norm(I(t));
        E(t) = acc;
      }
    }
    if (E(0) <= 0.0) continue;  // silent estimate: band invalid on our side too

    Eigen::VectorXd phi(Th);
    std::vector<bool> clipped(static_cast<size_t>(Th), false);
    for (int t = 0; t < Th; ++t) {
      if (E(t) > 0.0) {
        const double v = 10.0 * std::log10(E(t) / E(0));
        phi(t) = std::max(v, target.floor_db);
        clipped[static_cast<size_t>(t)] = v < target.floor_db;
      } else {
        phi(t) = target.floor_db;
        clipped[static_cast<size_t>(t)] = true;
      }
    }

    ++out.stats.bands_used;
    Eigen::VectorXd g_phi = Eigen::VectorXd::Zero(Th);
    for (int t = 0; t < T_c; ++t) {
      if (!target.mask(f, t)) continue;
      const double d = phi(t) - target.values_db(f, t);
      out.stats.sum += d * d;
      ++out.stats.count;
      g_phi(t) = 2.0 * d;
    }

    // phi_t = (10/ln10)(ln E_t - ln E_0): the E_0 term collects every bin.
    Eigen::VectorXd g_E = Eigen::VectorXd::Zero(Th);
    double sum_gphi = 0.0;
    for (int t = 0; t < Th; ++t) {
      if (clipped[static_cast<size_t>(t)] || g_phi(t) == 0.0) continue;
      g_E(t) += kDbScale * g_phi(t) / E(t);
      sum_gphi += g_phi(t);
    }
    g_E(0) -= kDbScale * sum_gphi / E(0);

    // E_t = sum_{tau >= t} |I_tau|^2: adjoint is the forward cumulative sum.
    Eigen::VectorXcd g_I(Th);
    {
      double acc = 0.0;
      for (int t = 0; t < Th; ++t) {
        acc += g_E(t);
        g_I(t) = 2.0 * acc * I(t);
      }
    }

    Eigen::VectorXcd g_c = Eigen::VectorXcd::Zero(K);
    for (int fp = lo; fp <= hi; ++fp) {
      const double sign = (fp % 2 == 0) ? 1.0 : -1.0;
      g_c.segment(static_cast<long>(fp - lo) * Th, Th) += sign * g_I;
    }
    if (g_c.isZero(0.0)) continue;

    // u = (A^H A)^{-1} g_c through the QR factors: A P = Q R gives
    // A^H A = P R^H R P^T, so solve R^H w = P^T g_c, R z = w, u = P z.
    const Eigen::MatrixXcd R =
        qr.matrixR().topLeftCorner(K, K).triangularView<Eigen::Upper>();
    const auto& P = qr.colsPermutation();
    const Eigen::VectorXcd pg = P.transpose() * g_c;
    Eigen::VectorXcd w = R.triangularView<Eigen::Upper>().adjoint().solve(pg);
    Eigen::VectorXcd z = R.triangularView<Eigen::Upper>().solve(w);
    const Eigen::VectorXcd u = P * z;

    // Least-squares sensitivity: gA = r u^H - (A u) c^H, scattered back
    // onto the spectrogram entries along the Toeplitz diagonals.
    const Eigen::VectorXcd Au = A * u;
    for (int fp = lo; fp <= hi; ++fp) {
      const long block = static_cast<long>(fp - lo) * Th;
      for (int tp = 0; tp < Th; ++tp) {
        const std::complex<double> ck = std::conj(c(block + tp));
        const std::complex<double> uk = std::conj(u(block + tp));
        for (int t = tp; t < std::min(T_y, T_x + tp); ++t) {
          const std::complex<double> gA = r(t) * uk - Au(t) * ck;
          out.d_re(fp, t - tp) += gA.real();
          out.d_im(fp, t - tp) += gA.imag();
        }
      }
    }
  }

  if (out.stats.count == 0) throw_validation("no bin passes the decay mask");
  out.stats.mean = out.stats.sum / static_cast<double>(out.stats.count);
  out.loss = out.stats.sum;
  return out;
}

LossGradient coherence_loss_grad(const Spectrogram& X_hat, const Spectrogram& Y,
                                 const Spectrogram& target_rir, const CtfConfig& cfg) {
  return coherence_loss_grad(X_hat, Y, edr_db(target_rir), cfg);
}

LossGradient coherence_loss_grad(const Spectrogram& X_hat, const Spectrogram& Y,
                                 const RirSpectrogramEstimate& target_rir,
                                 const CtfConfig& cfg) {
  return coherence_loss_grad(X_hat, Y, edr_db(target_rir), cfg);
}

BalanceWeights balance_weights(const std::vector<double>& grad_d,
                               const std::vector<double>& grad_phi, double w_phi) {
  if (!(w_phi > 0.0) || !std::isfinite(w_phi)) throw_validation("w_phi must be positive");
  double nd = 0.0, np = 0.0;
  for (double v : grad_d) nd += v * v;
  for (double v : grad_phi) np += v * v;
  nd = std::sqrt(nd);
  np = std::sqrt(np);
  if (!std::isfinite(nd) || !std::isfinite(np)) throw_validation("gradient norms must be finite");
  if (np == 0.0) throw_validation("physics gradient is zero; skip the term");
  BalanceWeights out;
  out.grad_norm_d = nd;
  out.grad_norm_phi = np;
  out.w_phi_effective = w_phi * nd / np;
  return out;
}

}  // namespace rirkit
