#pragma once

#include <cstdint>
#include <vector>

#include "semeq/channel.hpp"
#include "semeq/linalg.hpp"
#include "semeq/rng.hpp"

namespace semeq {

// Least-squares latent alignment T: S_gamma ~= T S_theta. A relative ridge
// engages when the source Gram is rank deficient.
struct AlignmentMap {
  RMat T;
  bool ridged = false;
};
AlignmentMap fit_alignment(const RMat& S_theta, const RMat& S_gamma);

// Semantics-agnostic MIMO equalizer: SVD precoder/combiner refined by
// alternating closed forms with one RIS projected-gradient step per round.
// Square arrays only (the digital baselines place payload on all n_t modes).
struct PhysicalEqualizer {
  CMat F;    // n_t x n_t
  CMat G;    // n_t x n_r
  CVec phi;
};
PhysicalEqualizer fit_physical(const ChannelRealization& chan, double sigma2,
                               int n_iters = 30, std::uint64_t seed = 0);

// --- payload plumbing shared by the digital baselines (exposed for tests) ---

// Adjacent pairing: symbol s carries real coords (2s, 2s+1); rows beyond the
// payload are zero.
CMat pad_pack(const RMat& vals, int n_complex);
RMat unpack(const CMat& Z);

// Stream-major placement: earlier payload symbols ride stronger channel
// modes (position (s % uses) * n_t + s / uses).
std::vector<int> mode_order(int n_complex, int n_t);
CMat to_modes(const CMat& Z, int n_t);
CMat from_modes(const CMat& Z, int n_t);

// Per-sample scales c_i with ||c_i F p_i||^2 = energy (F columns have norm
// 1/sqrt(n_t)); zero payloads pass through unscaled.
RVec sample_scales(const CMat& Zp, double energy, int n_t);

// One noisy pass of a stacked payload (rows grouped per channel use) through
// the physical link; the receiver knows the per-sample scale and undoes it.
CMat transmit(const CMat& Zp, double energy, const PhysicalEqualizer& phy,
              const ChannelRealization& chan, double sigma2, Rng& rng);

// Per-column top-magnitude selection (stable: ties keep the lowest index).
struct TopPayload {
  Eigen::MatrixXi idx;  // n_vals x N
  RMat vals;
};
TopPayload top_payload(const RMat& S, int n_vals);

struct BaselineEval {
  double mse = 0.0;
  double accuracy = -1.0;  // negative when no labels were supplied
};

// First-k: send the leading min(2 K n_t, N_theta) real latent coords, align
// at the receiver.
BaselineEval run_first_k(const RMat& S_theta, const RMat& S_gamma,
                         const AlignmentMap& align, const PhysicalEqualizer& phy,
                         const ChannelRealization& chan, double sigma2, int n_draws,
                         std::uint64_t seed, const RMat* centroids = nullptr,
                         const std::vector<std::uint32_t>* labels = nullptr);

// Top-k: per-sample largest-magnitude coords; half the symbol budget is
// charged to the index side channel, the payload gets full power.
BaselineEval run_top_k(const RMat& S_theta, const RMat& S_gamma,
                       const AlignmentMap& align, const PhysicalEqualizer& phy,
                       const ChannelRealization& chan, double sigma2, int n_draws,
                       std::uint64_t seed, const RMat* centroids = nullptr,
                       const std::vector<std::uint32_t>* labels = nullptr);

// Eigen-k: send the top 2 K n_t singular components of the alignment map
// (requires 2 K n_t <= min(N_gamma, N_theta)). `kap_override` narrows the
// subspace (tests).
BaselineEval run_eigen_k(const RMat& S_theta, const RMat& S_gamma,
                         const AlignmentMap& align, const PhysicalEqualizer& phy,
                         const ChannelRealization& chan, double sigma2, int n_draws,
                         std::uint64_t seed, const RMat* centroids = nullptr,
                         const std::vector<std::uint32_t>* labels = nullptr,
                         int kap_override = -1);

}  // namespace semeq
