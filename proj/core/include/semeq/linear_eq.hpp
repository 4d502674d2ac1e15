#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semeq/channel.hpp"
#include "semeq/linalg.hpp"
#include "semeq/pilots.hpp"

namespace semeq {

struct AdmmConfig {
  double rho = 1.0;
  int max_iters = 30;
  double tol_rel = 1e-8;  // relative objective change that stops the loop
  std::uint64_t seed = 0;
};

// Complex-linear semantic equalizer F/G with RIS phases, trained by ADMM.
// encode() whitens + centers the source latent before F; decode() adds the
// target mean back after G.
struct LinearEqualizer {
  CMat F;    // (K*n_t) x (N_theta/2), maps whitened latents to tx symbols
  CMat G;    // (N_gamma/2) x (K*n_r)
  CVec phi;  // RIS phases, length n_phi (may be 0)
  RMat weq;      // whitening transform with the complex-packing 1/sqrt(2) folded in
  RVec mu_theta;
  RVec mu_gamma;
  int k_uses = 1;
  int n_t = 1;
  int n_r = 1;
  double power = 1.0;
  bool ridge_warning = false;  // a near-singular solve needed regularization
  std::vector<double> history; // objective after each ADMM cycle
  double power_dev = 0.0;      // |tr(F^H F) - P| / P after the final rescale
  double phi_dev = 0.0;        // max | |phi_i| - 1 |

  CMat encode(const RMat& S_theta) const;
  RMat decode(const CMat& Y) const;
};

// (1/N) ||Z_gamma - G He F Z_theta||_F^2 + sigma2 ||G||_F^2 (noise in
// expectation); the quantity ADMM drives down.
double admm_objective(const CMat& Z_theta, const CMat& Z_gamma, const CMat& F,
                      const CMat& G, const CVec& phi, const ChannelRealization& chan,
                      double sigma2);

// Ridge-regularized MMSE decoder: G = Z_gamma Ztil^H (Ztil Ztil^H + n_sigma2 I)^{-1}.
// A tiny ridge engages when the Gram is numerically singular (noise-free
// overcomplete receivers); `ridged` reports it.
CMat g_step(const CMat& Ztil, const CMat& Z_gamma, double n_sigma2, bool* ridged);

// Power-ball proximal step: the closest point to F + S with tr(R R^H) <= P.
CMat r_step(const CMat& F, const CMat& S, double p_budget);

// Linearization of the residual in the RIS phases:
// ||v - D phi||^2 == ||Z_gamma - G He(phi) F Z_theta||_F^2 for all phi.
struct RisSystem {
  CVec v;  // vec(Z_gamma - G (I (x) H_d) F Z_theta)
  CMat D;  // one column per RIS element
};
RisSystem build_ris_system(const CMat& Z_theta, const CMat& Z_gamma, const CMat& F,
                           const CMat& G, const ChannelRealization& chan);

// One projected-gradient ascent step on the RIS objective with step
// 1/lambda_max(D^H D); returns phi unchanged when D is negligible.
CVec phi_step(const CVec& phi, const RisSystem& sys);

LinearEqualizer fit_linear(const RMat& S_theta, const RMat& S_gamma,
                           const ChannelRealization& chan, const AdmmConfig& cfg);

// SEMEQLIN container: magic "SEMEQLIN", u32 LE version=1, u32 LE k_uses,
// n_t, n_r, n_phi, n_theta, n_gamma, f64 power, then column-major f64 LE
// arrays (complex entries interleaved re,im): F, G, phi, weq, mu_theta,
// mu_gamma.
void save_linear(const LinearEqualizer& eq, const std::string& path);
LinearEqualizer load_linear(const std::string& path);

}  // namespace semeq
