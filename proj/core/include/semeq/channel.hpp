#pragma once

#include <cstdint>

#include "semeq/linalg.hpp"
#include "semeq/rng.hpp"

namespace semeq {

struct ChannelParams {
  int n_t = 8;          // transmit antennas
  int n_r = 8;          // receive antennas
  int n_phi = 0;        // RIS elements (0 = no RIS)
  int k_uses = 1;       // channel uses per latent vector
  double alpha_d = 1e6; // direct-path attenuation
  double alpha_1 = 10.0;
  double alpha_2 = 10.0;
  double snr_db = 10.0; // transmission SNR
  double power = 1.0;   // transmit power budget P
};

// One draw of the Rayleigh triplet; entries ~ CN(0, 1/alpha).
struct ChannelRealization {
  CMat H_d;  // n_r x n_t
  CMat H_1;  // n_phi x n_t
  CMat H_2;  // n_r x n_phi
  ChannelParams params;
  std::uint64_t seed = 0;
};

struct RisPhases {
  CVec phi;
};

struct NoiseModel {
  double sigma2 = 0.0;  // per-dimension complex noise variance
  int dim = 0;          // K * n_r
};

// Throws unless every |phi_i| is within 1e-9 of 1; called at the API
// boundary of everything that consumes RIS phases.
void check_unit_modulus(const CVec& phi, double tol = 1e-9);

// Elementwise phi_i / |phi_i|. A zero-magnitude element keeps its previous
// value when `prev` is given, else projects to 1 (projection undefined at 0).
CVec project_phases(const CVec& raw, const CVec* prev = nullptr);

ChannelRealization sample_channel(const ChannelParams& params, std::uint64_t seed);

// H_d + H_2 diag(phi) H_1 (the single-use block of the effective channel)
CMat ris_block(const ChannelRealization& chan, const CVec& phi);

// Full K*n_r x K*n_t effective channel I_K (x) block; materialized for
// oracles and small systems only — bulk paths apply the block K times.
CMat effective_channel(const ChannelRealization& chan, const CVec& phi);

// Applies the block-diagonal effective channel to stacked inputs:
// X is (K*n_t) x N, result (K*n_r) x N.
CMat apply_effective(const CMat& block, int k_uses, const CMat& X);

// sigma2 = P / (K * SNR_linear); the paper's sigma_w is read as a variance
// (its sigma_w-vs-sigma_w^2 usage is internally inconsistent).
double noise_sigma2(const ChannelParams& params);

CVec sample_noise(const NoiseModel& model, Rng& rng);
CMat sample_noise_mat(const NoiseModel& model, Eigen::Index n, Rng& rng);

// zeta = K*N_t / (N_theta/2)
double compression_factor(const ChannelParams& params, int n_theta);

}  // namespace semeq
