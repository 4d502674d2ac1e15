#include "semeq/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semeq/pilots.hpp"

namespace semeq {

namespace {

struct ClosedForms {
  CMat F, G;
};

// SVD precoder (columns scaled to 1/sqrt(n_t)) and per-mode MMSE combiner.
ClosedForms physical_closed_forms(const CMat& Hb, double sigma2) {
  const Eigen::Index n_r = Hb.rows();
  const Eigen::Index n_t = Hb.cols();
  Eigen::JacobiSVD<CMat> svd(Hb, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RVec& sv = svd.singularValues();
  ClosedForms out;
  out.F = svd.matrixV() / std::sqrt(static_cast<double>(n_t));
  out.G = CMat::Zero(n_t, n_r);
  const double reg = static_cast<double>(n_r) * sigma2;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double denom = std::max(sv(i) * sv(i) + reg, 1e-300);
    out.G.row(i) = std::sqrt(static_cast<double>(n_t)) * sv(i) / denom *
                   svd.matrixU().col(i).adjoint();
  }
  return out;
}

double mean_sq_err(const RMat& S_gamma, const RMat& S_hat) {
  return (S_gamma - S_hat).colwise().squaredNorm().mean();
}

struct DrawAccumulator {
  double mse = 0.0;
  double acc = 0.0;
  int n = 0;
  void add(const RMat& S_gamma, const RMat& S_hat, const RMat* centroids,
           const std::vector<std::uint32_t>* labels) {
    mse += mean_sq_err(S_gamma, S_hat);
    if (centroids && labels) acc += centroid_accuracy(S_hat, *labels, *centroids);
    ++n;
  }
  BaselineEval finish(bool with_acc) const {
    BaselineEval e;
    e.mse = mse / n;
    e.accuracy = with_acc ? acc / n : -1.0;
    return e;
  }
};

int symbol_budget(const ChannelRealization& chan) {
  if (chan.params.k_uses < 1)
    throw std::invalid_argument("baselines: need at least one channel use");
  return chan.params.k_uses * chan.params.n_t;
}

}  // namespace

AlignmentMap fit_alignment(const RMat& S_theta, const RMat& S_gamma) {
  if (S_theta.cols() != S_gamma.cols())
    throw std::invalid_argument("fit_alignment: sample counts differ");
  const RMat A = S_gamma * S_theta.transpose();
  const RMat B = S_theta * S_theta.transpose();
  Eigen::SelfAdjointEigenSolver<RMat> eig(B);
  const RVec& w = eig.eigenvalues();
  const double wmax = w(w.size() - 1);
  AlignmentMap out;
  double ridge = 0.0;
  if (w(0) <= wmax * 1e-12) {
    ridge = wmax > 0 ? wmax * 1e-8 : 1e-8;
    out.ridged = true;
  }
  const RVec inv = (w.array() + ridge).inverse();
  out.T = (A * eig.eigenvectors()) * inv.asDiagonal() * eig.eigenvectors().transpose();
  return out;
}

PhysicalEqualizer fit_physical(const ChannelRealization& chan, double sigma2,
                               int n_iters, std::uint64_t seed) {
  const ChannelParams& p = chan.params;
  if (p.n_t != p.n_r)
    throw std::invalid_argument("fit_physical: square arrays required (n_t == n_r)");
  Rng rng(seed + 555);
  CVec phi = rng.unit_phase_vec(p.n_phi);

  for (int it = 0; it < n_iters; ++it) {
    const CMat Hb = ris_block(chan, phi);
    const ClosedForms cf = physical_closed_forms(Hb, sigma2);
    if (p.n_phi > 0) {
      const Eigen::Index n_t = p.n_t;
      CMat resid = CMat::Identity(n_t, n_t) - cf.G * chan.H_d * cf.F;
      const CVec v = Eigen::Map<const CVec>(resid.data(), resid.size());
      const CMat Pm = cf.G * chan.H_2;   // n_t x n_phi
      const CMat Qm = chan.H_1 * cf.F;   // n_phi x n_t
      CMat D(n_t * n_t, p.n_phi);
      for (int j = 0; j < p.n_phi; ++j) {
        Eigen::Map<CMat> col(D.col(j).data(), n_t, n_t);
        col.noalias() = Pm.col(j) * Qm.row(j);
      }
      Eigen::SelfAdjointEigenSolver<CMat> eig(D.adjoint() * D, Eigen::EigenvaluesOnly);
      const double alpha = 1.0 / std::max(eig.eigenvalues()(p.n_phi - 1), 1e-300);
      const CVec step = phi + alpha * (D.adjoint() * (v - D * phi));
      phi = project_phases(step, &phi);
    }
  }
  const ClosedForms cf = physical_closed_forms(ris_block(chan, phi), sigma2);
  return {cf.F, cf.G, phi};
}

CMat pad_pack(const RMat& vals, int n_complex) {
  if (vals.rows() > 2 * static_cast<Eigen::Index>(n_complex))
    throw std::invalid_argument("pad_pack: payload exceeds symbol budget");
  RMat pad = RMat::Zero(2 * n_complex, vals.cols());
  pad.topRows(vals.rows()) = vals;
  CMat Z(n_complex, vals.cols());
  for (int s = 0; s < n_complex; ++s)
    Z.row(s) = pad.row(2 * s) + cplx(0.0, 1.0) * pad.row(2 * s + 1);
  return Z;
}

RMat unpack(const CMat& Z) {
  RMat out(2 * Z.rows(), Z.cols());
  for (Eigen::Index s = 0; s < Z.rows(); ++s) {
    out.row(2 * s) = Z.row(s).real();
    out.row(2 * s + 1) = Z.row(s).imag();
  }
  return out;
}

std::vector<int> mode_order(int n_complex, int n_t) {
  const int uses = std::max(n_complex / n_t, 1);
  std::vector<int> pos(static_cast<std::size_t>(n_complex));
  for (int s = 0; s < n_complex; ++s)
    pos[static_cast<std::size_t>(s)] = (s % uses) * n_t + s / uses;
  return pos;
}

CMat to_modes(const CMat& Z, int n_t) {
  const auto pos = mode_order(static_cast<int>(Z.rows()), n_t);
  CMat out = CMat::Zero(Z.rows(), Z.cols());
  for (Eigen::Index s = 0; s < Z.rows(); ++s)
    out.row(pos[static_cast<std::size_t>(s)]) = Z.row(s);
  return out;
}

CMat from_modes(const CMat& Z, int n_t) {
  const auto pos = mode_order(static_cast<int>(Z.rows()), n_t);
  CMat out(Z.rows(), Z.cols());
  for (Eigen::Index s = 0; s < Z.rows(); ++s)
    out.row(s) = Z.row(pos[static_cast<std::size_t>(s)]);
  return out;
}

RVec sample_scales(const CMat& Zp, double energy, int n_t) {
  const RVec sq = Zp.colwise().squaredNorm();
  RVec c = RVec::Ones(Zp.cols());
  for (Eigen::Index j = 0; j < c.size(); ++j)
    if (sq[j] > 0.0) c[j] = std::sqrt(energy * n_t / sq[j]);
  return c;
}

CMat transmit(const CMat& Zp, double energy, const PhysicalEqualizer& phy,
              const ChannelRealization& chan, double sigma2, Rng& rng) {
  const int n_t = static_cast<int>(phy.F.rows());
  const Eigen::Index n = Zp.cols();
  if (Zp.rows() % n_t != 0)
    throw std::invalid_argument("transmit: payload rows must be a multiple of n_t");
  const RVec c = sample_scales(Zp, energy, n_t);
  const CMat Hb = ris_block(chan, phy.phi);
  CMat out(Zp.rows(), n);
  for (Eigen::Index k = 0; k < Zp.rows() / n_t; ++k) {
    CMat Pk = Zp.middleRows(k * n_t, n_t);
    Pk.array().rowwise() *= c.transpose().array();
    CMat Y = Hb * (phy.F * Pk) + rng.cnormal_mat(Hb.rows(), n, sigma2);
    out.middleRows(k * n_t, n_t).noalias() = phy.G * Y;
  }
  out.array().rowwise() /= c.transpose().array();
  return out;
}

TopPayload top_payload(const RMat& S, int n_vals) {
  TopPayload tp;
  tp.idx.resize(n_vals, S.cols());
  tp.vals.resize(n_vals, S.cols());
  std::vector<int> order(static_cast<std::size_t>(S.rows()));
  for (Eigen::Index j = 0; j < S.cols(); ++j) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(S(a, j)) > std::abs(S(b, j));
    });
    for (int r = 0; r < n_vals; ++r) {
      tp.idx(r, j) = order[static_cast<std::size_t>(r)];
      tp.vals(r, j) = S(order[static_cast<std::size_t>(r)], j);
    }
  }
  return tp;
}

BaselineEval run_first_k(const RMat& S_theta, const RMat& S_gamma,
                         const AlignmentMap& align, const PhysicalEqualizer& phy,
                         const ChannelRealization& chan, double sigma2, int n_draws,
                         std::uint64_t seed, const RMat* centroids,
                         const std::vector<std::uint32_t>* labels) {
  const int budget = symbol_budget(chan);
  const int n_used = std::min<int>(2 * budget, static_cast<int>(S_theta.rows()));
  Rng rng(seed * 1000003 + 31);
  const CMat Zp = to_modes(pad_pack(S_theta.topRows(n_used), budget), chan.params.n_t);
  DrawAccumulator acc;
  for (int d = 0; d < n_draws; ++d) {
    const CMat Zr = from_modes(transmit(Zp, chan.params.power, phy, chan, sigma2, rng),
                               chan.params.n_t);
    const RMat Sr = unpack(Zr);
    RMat S_hat_t = RMat::Zero(S_theta.rows(), S_theta.cols());
    S_hat_t.topRows(n_used) = Sr.topRows(n_used);
    acc.add(S_gamma, align.T * S_hat_t, centroids, labels);
  }
  return acc.finish(centroids && labels);
}

BaselineEval run_top_k(const RMat& S_theta, const RMat& S_gamma,
                       const AlignmentMap& align, const PhysicalEqualizer& phy,
                       const ChannelRealization& chan, double sigma2, int n_draws,
                       std::uint64_t seed, const RMat* centroids,
                       const std::vector<std::uint32_t>* labels) {
  const int n_t = chan.params.n_t;
  const int budget = symbol_budget(chan);
  // K n_t real coords; the index side channel is charged the other half of
  // the symbol budget, the payload keeps the full energy budget.
  const int n_vals = std::min<int>(budget, static_cast<int>(S_theta.rows()));
  const int m_sym = (n_vals + 1) / 2;
  const int n_pad = (m_sym + n_t - 1) / n_t * n_t;
  Rng rng(seed * 1000003 + 32);
  const TopPayload tp = top_payload(S_theta, n_vals);
  const CMat Zp = to_modes(pad_pack(tp.vals, n_pad), n_t);
  DrawAccumulator acc;
  for (int d = 0; d < n_draws; ++d) {
    const CMat Zr =
        from_modes(transmit(Zp, chan.params.power, phy, chan, sigma2, rng), n_t);
    const RMat Vr = unpack(Zr).topRows(n_vals);
    RMat S_hat_t = RMat::Zero(S_theta.rows(), S_theta.cols());
    for (Eigen::Index j = 0; j < S_theta.cols(); ++j)
      for (int r = 0; r < n_vals; ++r) S_hat_t(tp.idx(r, j), j) = Vr(r, j);
    acc.add(S_gamma, align.T * S_hat_t, centroids, labels);
  }
  return acc.finish(centroids && labels);
}

BaselineEval run_eigen_k(const RMat& S_theta, const RMat& S_gamma,
                         const AlignmentMap& align, const PhysicalEqualizer& phy,
                         const ChannelRealization& chan, double sigma2, int n_draws,
                         std::uint64_t seed, const RMat* centroids,
                         const std::vector<std::uint32_t>* labels, int kap_override) {
  const int n_t = chan.params.n_t;
  const int budget = symbol_budget(chan);
  const int kap = kap_override > 0 ? kap_override : 2 * budget;
  if (kap > std::min(align.T.rows(), align.T.cols()))
    throw std::invalid_argument("eigen-k requires 2*K*n_t <= min(N_gamma, N_theta)");
  Eigen::JacobiSVD<RMat> svd(align.T, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RMat Uk = svd.matrixU().leftCols(kap);
  const RVec rt = svd.singularValues().head(kap).array().sqrt();
  const RMat Vk = svd.matrixV().leftCols(kap);
  Rng rng(seed * 1000003 + 33);
  const RMat e = rt.asDiagonal() * (Vk.transpose() * S_theta);
  const CMat Zp = to_modes(pad_pack(e, budget), n_t);
  DrawAccumulator acc;
  for (int d = 0; d < n_draws; ++d) {
    const CMat Zr =
        from_modes(transmit(Zp, chan.params.power, phy, chan, sigma2, rng), n_t);
    const RMat er = unpack(Zr).topRows(kap);
    acc.add(S_gamma, Uk * (rt.asDiagonal() * er), centroids, labels);
  }
  return acc.finish(centroids && labels);
}

}  // namespace semeq
