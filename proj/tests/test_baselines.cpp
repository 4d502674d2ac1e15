#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "semeq/baselines.hpp"
#include "semeq/pilots.hpp"

using namespace semeq;

namespace {

double rel_residual(const AlignmentMap& a, const RMat& St, const RMat& Sg) {
  return (a.T * St - Sg).norm() / Sg.norm();
}

SyntheticTaskSpec small_spec(MismatchKind kind, std::uint64_t seed) {
  SyntheticTaskSpec spec;
  spec.concept_dim = 8;
  spec.n_classes = 5;
  spec.n_theta = 24;
  spec.n_gamma = 16;
  spec.n_total = 700;
  spec.n_train = 400;
  spec.n_val = 50;
  spec.mismatch = kind;
  spec.seed = seed;
  return spec;
}

ChannelRealization square_channel(int n, int k_uses, std::uint64_t seed,
                                  double snr_db = 10.0) {
  ChannelParams p;
  p.n_t = n;
  p.n_r = n;
  p.n_phi = 0;
  p.k_uses = k_uses;
  p.alpha_d = 1.0;  // live direct path; baselines need no RIS
  p.snr_db = snr_db;
  return sample_channel(p, seed);
}

double eval_mse(const RMat& pred, const RMat& truth) {
  return (pred - truth).colwise().squaredNorm().mean();
}

}  // namespace

TEST_CASE("alignment recovers an exact linear mismatch") {
  SyntheticTaskSpec spec = small_spec(MismatchKind::Linear, 7);
  spec.latent_noise = 0.0;  // gamma is exactly linear in theta
  const PilotSplits sp = generate_synthetic(spec);
  const AlignmentMap a = fit_alignment(sp.train.S_theta, sp.train.S_gamma);
  CHECK_FALSE(a.ridged);
  CHECK(rel_residual(a, sp.train.S_theta, sp.train.S_gamma) < 1e-8);
  CHECK(rel_residual(a, sp.test.S_theta, sp.test.S_gamma) < 1e-6);
}

TEST_CASE("alignment cannot flatten the nonlinear mismatch") {
  const PilotSplits sp = generate_synthetic(small_spec(MismatchKind::Nonlinear, 7));
  const AlignmentMap a = fit_alignment(sp.train.S_theta, sp.train.S_gamma);
  CHECK(rel_residual(a, sp.train.S_theta, sp.train.S_gamma) > 0.05);
}

TEST_CASE("alignment ridges a rank-deficient source") {
  Rng rng(3);
  RMat St = RMat::Zero(6, 40);
  St.topRows(2) = rng.normal_mat(2, 40);  // rank 2 of 6
  const RMat Sg = rng.normal_mat(4, 40);
  const AlignmentMap a = fit_alignment(St, Sg);
  CHECK(a.ridged);
  CHECK(a.T.allFinite());
}

TEST_CASE("payload packing uses adjacent pairing") {
  RMat vals(4, 1);
  vals << 1.0, 2.0, 3.0, 4.0;
  const CMat Z = pad_pack(vals, 3);
  REQUIRE(Z.rows() == 3);
  CHECK(Z(0, 0) == cplx(1.0, 2.0));
  CHECK(Z(1, 0) == cplx(3.0, 4.0));
  CHECK(Z(2, 0) == cplx(0.0, 0.0));  // padding beyond the payload

  const RMat back = unpack(Z);
  REQUIRE(back.rows() == 6);
  CHECK(back.topRows(4) == vals);
  CHECK(back.bottomRows(2).norm() == 0.0);
}

TEST_CASE("mode order interleaves streams across uses") {
  const std::vector<int> ord = mode_order(8, 4);
  const std::vector<int> want = {0, 4, 1, 5, 2, 6, 3, 7};
  CHECK(ord == want);

  Rng rng(5);
  const CMat Z = rng.cnormal_mat(8, 7);
  CHECK((from_modes(to_modes(Z, 4), 4) - Z).norm() == 0.0);
  // symbol 1 (second-strongest slot) lands on mode row 4 = use 1, antenna 0
  CHECK(to_modes(Z, 4)(4, 2) == Z(1, 2));
}

TEST_CASE("per-sample scaling hits the energy budget") {
  Rng rng(9);
  const int n_t = 4;
  CMat Zp = rng.cnormal_mat(8, 5);
  Zp.col(3).setZero();
  const double energy = 2.5;
  const RVec c = sample_scales(Zp, energy, n_t);
  for (int i = 0; i < 5; ++i) {
    if (i == 3) {
      CHECK(c[i] == 1.0);
      continue;
    }
    // F columns carry norm 1/sqrt(n_t), so ||c F z||^2 = c^2 ||z||^2 / n_t
    const double sent = c[i] * c[i] * Zp.col(i).squaredNorm() / n_t;
    CHECK(sent == doctest::Approx(energy).epsilon(1e-12));
  }
}

TEST_CASE("noiseless transmission is transparent") {
  const int n = 4, K = 2;
  const ChannelRealization chan = square_channel(n, K, 11);
  const PhysicalEqualizer phy = fit_physical(chan, 0.0, 30, 1);
  REQUIRE(phy.F.rows() == n);
  REQUIRE(phy.G.cols() == n);
  CHECK((phy.G * ris_block(chan, phy.phi) * phy.F - CMat::Identity(n, n)).norm() <
        1e-9);

  Rng rng(13);
  const CMat Zp = rng.cnormal_mat(K * n, 6);
  const CMat out = transmit(Zp, 1.0, phy, chan, 0.0, rng);
  CHECK((out - Zp).norm() < 1e-8 * Zp.norm());
}

TEST_CASE("physical fit rejects rectangular arrays") {
  ChannelParams p;
  p.n_t = 4;
  p.n_r = 6;
  p.alpha_d = 1.0;
  const ChannelRealization chan = sample_channel(p, 1);
  CHECK_THROWS_AS(fit_physical(chan, 0.1), std::invalid_argument);
}

TEST_CASE("top-k selection is stable under ties") {
  RMat S(4, 2);
  S << 2.0, -3.0,
       -2.0, 1.0,
       0.5, 3.0,
       2.0, -1.0;
  const TopPayload tp = top_payload(S, 2);
  // column 0: |2|, |-2|, |2| tie -> keep rows 0 and 1 (lowest indices)
  CHECK(tp.idx(0, 0) == 0);
  CHECK(tp.idx(1, 0) == 1);
  CHECK(tp.vals(0, 0) == 2.0);
  CHECK(tp.vals(1, 0) == -2.0);
  // column 1: |-3| and |3| tie at magnitude 3 -> rows 0 then 2
  CHECK(tp.idx(0, 1) == 0);
  CHECK(tp.idx(1, 1) == 2);
}

namespace {

struct BaselineBundle {
  PilotSplits sp;
  AlignmentMap align;
  ChannelRealization chan;
  PhysicalEqualizer phy;
};

BaselineBundle bundle(int n_theta, int n_gamma, int n, int K, std::uint64_t seed) {
  BaselineBundle b;
  SyntheticTaskSpec spec = small_spec(MismatchKind::Linear, seed);
  spec.concept_dim = 4;
  spec.n_classes = 4;
  spec.n_theta = n_theta;
  spec.n_gamma = n_gamma;
  spec.latent_noise = 0.0;
  b.sp = generate_synthetic(spec);
  b.align = fit_alignment(b.sp.train.S_theta, b.sp.train.S_gamma);
  b.chan = square_channel(n, K, mix_seed(seed, 2));
  b.phy = fit_physical(b.chan, 0.0, 30, 3);
  return b;
}

}  // namespace

TEST_CASE("first-k and eigen-k match plain alignment when nothing is dropped") {
  // 2 K n_t = 8 = N_theta = N_gamma: every coordinate and every singular
  // direction fits, so both reductions degenerate to the alignment map.
  BaselineBundle b = bundle(8, 8, 4, 1, 21);
  const RMat ref = b.align.T * b.sp.test.S_theta;
  const double mse_ref = eval_mse(ref, b.sp.test.S_gamma);

  const BaselineEval fk = run_first_k(b.sp.test.S_theta, b.sp.test.S_gamma, b.align,
                                      b.phy, b.chan, 0.0, 1, 0);
  const BaselineEval ek = run_eigen_k(b.sp.test.S_theta, b.sp.test.S_gamma, b.align,
                                      b.phy, b.chan, 0.0, 1, 0);
  CHECK(fk.mse == doctest::Approx(mse_ref).epsilon(1e-6));
  CHECK(ek.mse == doctest::Approx(mse_ref).epsilon(1e-6));
}

TEST_CASE("top-k matches alignment when the payload covers all coords") {
  // K n_t = 8 >= N_theta = 8: even after halving the budget for the index
  // side channel, every source coordinate still ships.
  BaselineBundle b = bundle(8, 8, 8, 2, 22);
  const double mse_ref = eval_mse(RMat(b.align.T * b.sp.test.S_theta),
                                  b.sp.test.S_gamma);
  const BaselineEval tk = run_top_k(b.sp.test.S_theta, b.sp.test.S_gamma, b.align,
                                    b.phy, b.chan, 0.0, 1, 0);
  CHECK(tk.mse == doctest::Approx(mse_ref).epsilon(1e-6));
}

TEST_CASE("eigen-k with one component reproduces the rank-1 oracle") {
  BaselineBundle b = bundle(8, 8, 4, 1, 23);
  // overwrite the alignment with a rank-1 map so kappa = 1 is lossless
  Rng rng(29);
  const RVec u = rng.normal_vec(8);
  const RVec v = rng.normal_vec(8);
  b.align.T = u * v.transpose();
  const RMat ref = b.align.T * b.sp.test.S_theta;
  const BaselineEval ek =
      run_eigen_k(b.sp.test.S_theta, b.sp.test.S_gamma, b.align, b.phy, b.chan, 0.0,
                  1, 0, nullptr, nullptr, /*kap_override=*/1);
  CHECK(eval_mse(ref, b.sp.test.S_gamma) == doctest::Approx(ek.mse).epsilon(1e-6));
}

TEST_CASE("eigen-k refuses a budget beyond the latent dimensions") {
  BaselineBundle b = bundle(8, 8, 4, 2, 24);  // 2 K n_t = 16 > 8
  CHECK_THROWS_AS(run_eigen_k(b.sp.test.S_theta, b.sp.test.S_gamma, b.align, b.phy,
                              b.chan, 0.0, 1, 0),
                  std::invalid_argument);
}

TEST_CASE("baselines report label accuracy and react to noise") {
  BaselineBundle b = bundle(8, 8, 4, 1, 25);
  const RMat cen = class_centroids(b.sp.train.S_gamma, b.sp.train.labels, 4);
  const double sigma2 = noise_sigma2(b.chan.params);

  const BaselineEval clean =
      run_first_k(b.sp.test.S_theta, b.sp.test.S_gamma, b.align, b.phy, b.chan, 0.0,
                  1, 5, &cen, &b.sp.test.labels);
  const BaselineEval noisy =
      run_first_k(b.sp.test.S_theta, b.sp.test.S_gamma, b.align, b.phy, b.chan,
                  sigma2, 3, 5, &cen, &b.sp.test.labels);
  CHECK(clean.accuracy > 0.9);
  CHECK(noisy.mse > clean.mse);
  CHECK(noisy.accuracy <= 1.0);
  CHECK(noisy.accuracy >= 0.0);

  // identical seed and draws reproduce bitwise
  const BaselineEval again =
      run_first_k(b.sp.test.S_theta, b.sp.test.S_gamma, b.align, b.phy, b.chan,
                  sigma2, 3, 5, &cen, &b.sp.test.labels);
  CHECK(again.mse == noisy.mse);
  CHECK(again.accuracy == noisy.accuracy);
}
