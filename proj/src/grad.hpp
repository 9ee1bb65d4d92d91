// Copyright 2025 rirkit authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ctf.hpp"
#include "decay.hpp"
#include "rir_spec.hpp"
#include "stft.hpp"

namespace rirkit {

// Gradient of the masked decay-coherence loss with respect to the dry
// spectrogram estimate, split into real and imaginary partials (for a real
// loss L of z = a + ib, d_re = dL/da and d_im = dL/db).
struct LossGradient {
  Eigen::MatrixXd d_re;  // F x T_x
  Eigen::MatrixXd d_im;
  double loss = 0.0;
  CoherenceStats stats;
};

// Differentiates the composition
//   X_hat -> per-band least squares -> filter bank -> RIR spectrogram
//         -> EDR -> dB scaling -> masked squared error vs. target
// analytically: the decay chain uses cumulative-sum adjoints, and the
// least-squares stage the closed-form sensitivity of c = (A^H A)^{-1} A^H b,
// evaluated through the stored QR factors. The mask and the band-validity
// pattern are held fixed; rank-deficient bands contribute nothing.
LossGradient coherence_loss_grad(const Spectrogram& X_hat, const Spectrogram& Y,
                                 const EnergyDecayRelief& target, const CtfConfig& cfg);
LossGradient coherence_loss_grad(const Spectrogram& X_hat, const Spectrogram& Y,
                                 const Spectrogram& target_rir, const CtfConfig& cfg);
LossGradient coherence_loss_grad(const Spectrogram& X_hat, const Spectrogram& Y,
                                 const RirSpectrogramEstimate& target_rir,
                                 const CtfConfig& cfg);

// Loss balancing: rescale the physics term so its gradient norm is w_phi
// times the reconstruction-loss gradient norm.
struct BalanceWeights {
  double w_d = 1.0;
  double w_phi_effective = 0.0;
  double grad_norm_d = 0.0;
  double grad_norm_phi = 0.0;
};

BalanceWeights balance_weights(const std::vector<double>& grad_d,
                               const std::vector<double>& grad_phi, double w_phi = 0.1);

}  // namespace rirkit
