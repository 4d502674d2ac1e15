#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semeq/channel.hpp"
#include "semeq/linalg.hpp"

namespace semeq {

// Dense complex layer; `mask` marks pruned weights (0 = permanently dead).
struct ComplexDense {
  CMat W;
  CVec b;
  RMat mask;  // same shape as W, entries in {0,1}
};

// Two-layer complex MLP encoder/decoder pair trained end to end through the
// (differentiable) RIS channel, with magnitude-GELU activations, batch power
// normalization (frozen into an EMA scale for inference), and optional
// magnitude pruning of the four weight matrices.
struct NeuralEqualizer {
  ComplexDense f1, f2;  // encoder: latent -> hidden -> K*n_t symbols
  ComplexDense g1, g2;  // decoder: K*n_r -> hidden -> target latent
  CVec phi_raw;         // unconstrained RIS parameters; forward projects to |.|=1
  double ema_scale = 1.0;
  RMat weq;       // input whitening (packing factor folded in)
  RVec mu_theta;
  int n_theta = 0;  // real latent dims (for odd-dim padding bookkeeping)
  int n_gamma = 0;
  int k_uses = 1;
  int n_t = 1;
  int n_r = 1;
  double power = 1.0;

  // training diagnostics (not serialized)
  std::vector<double> train_history;  // mean batch loss per epoch
  std::vector<double> val_history;    // val MSE per epoch
  double best_val = 0.0;
  int epochs_run = 0;
  double max_power_dev = 0.0;   // worst batch |mean tx power - P| / P
  double max_phase_dev = 0.0;   // worst | |projected phi| - 1 |
  bool mask_monotone = true;    // active weight count never increased
  bool pruned_stay_zero = true; // masked weights are exactly zero at the end

  CVec phases() const;              // projected unit-modulus phases
  CMat encode(const RMat& S_theta) const;
  RMat decode(const CMat& Y) const;
};

struct TrainConfig {
  double tau = 1e-3;       // Adam step size
  int batch = 64;          // remainder batches are dropped
  int max_epochs = 500;
  int patience = 20;       // epochs without val improvement before stopping
  double beta = 0.0;       // pruning threshold multiplier (cut |w| < beta*tau)
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double ema_momentum = 0.99;
  std::uint64_t seed = 0;
};

// Conjugate-Wirtinger gradients (dL/d conj(param)); the real-coordinate
// gradient of a parameter component is 2*Re / 2*Im of these.
struct NeuralGradients {
  CMat dW1, dW2, dV1, dV2;
  CVec db1, db2, dc1, dc2;
  CVec dp;    // wrt the projected phases
  CVec dphi;  // wrt the raw phases (through the projection)
};

// Per-forward observables used for constraint tracking and the EMA scale.
struct ForwardStats {
  double scale = 1.0;       // batch power-normalization factor
  double batch_power = 0.0; // mean per-sample tx power actually emitted
  double max_phase_err = 0.0;  // max | |projected phi| - 1 |
};

// Training-mode forward (batch power normalization) with an explicit noise
// draw; returns the mean per-sample squared error. `stats` and `grads` are
// optional outputs.
double neural_loss_and_grads(const NeuralEqualizer& eq, const CMat& Z_in,
                             const CMat& Z_target, const ChannelRealization& chan,
                             const CMat& noise, ForwardStats* stats,
                             NeuralGradients* grads);

NeuralEqualizer train_neural(const RMat& S_theta_train, const RMat& S_gamma_train,
                             const RMat& S_theta_val, const RMat& S_gamma_val,
                             const ChannelRealization& chan, const TrainConfig& cfg);

// Pruning bookkeeping over the four weight matrices.
std::int64_t active_weights(const NeuralEqualizer& eq);
double weight_sparsity(const NeuralEqualizer& eq);

// SEMEQNN1 container: magic "SEMEQNN1", u32 LE version=1, u32 LE k_uses,
// n_t, n_r, n_phi, n_theta, n_gamma, n_hidden, f64 power, f64 ema_scale,
// then per layer (f1, f2, g1, g2): W complex f64 interleaved column-major,
// b complex f64, mask u8; then phi_raw complex f64, weq f64, mu_theta f64.
void save_neural(const NeuralEqualizer& eq, const std::string& path);
NeuralEqualizer load_neural(const std::string& path);

}  // namespace semeq
