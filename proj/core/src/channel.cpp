#include "semeq/channel.hpp"

namespace semeq {

void check_unit_modulus(const CVec& phi, double tol) {
  for (Eigen::Index i = 0; i < phi.size(); ++i)
    if (std::abs(std::abs(phi[i]) - 1.0) > tol)
      throw std::invalid_argument("RIS phases must be unit modulus");
}

CVec project_phases(const CVec& raw, const CVec* prev) {
  CVec out(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    const double m = std::abs(raw[i]);
    if (m > 0.0)
      out[i] = raw[i] / m;
    else
      out[i] = prev ? (*prev)[i] : cplx(1.0, 0.0);
  }
  return out;
}

ChannelRealization sample_channel(const ChannelParams& params, std::uint64_t seed) {
  if (params.n_t < 1 || params.n_r < 1 || params.k_uses < 1 || params.n_phi < 0)
    throw std::invalid_argument("sample_channel: invalid dimensions");
  if (params.alpha_d <= 0 || params.alpha_1 <= 0 || params.alpha_2 <= 0 || params.power <= 0)
    throw std::invalid_argument("sample_channel: attenuations and power must be positive");
  Rng rng(seed);
  ChannelRealization chan;
  chan.params = params;
  chan.seed = seed;
  chan.H_d = rng.cnormal_mat(params.n_r, params.n_t, 1.0 / params.alpha_d);
  if (params.n_phi > 0) {
    chan.H_1 = rng.cnormal_mat(params.n_phi, params.n_t, 1.0 / params.alpha_1);
    chan.H_2 = rng.cnormal_mat(params.n_r, params.n_phi, 1.0 / params.alpha_2);
  } else {
    chan.H_1.resize(0, params.n_t);
    chan.H_2.resize(params.n_r, 0);
  }
  return chan;
}

CMat ris_block(const ChannelRealization& chan, const CVec& phi) {
  if (phi.size() != chan.H_1.rows())
    throw std::invalid_argument("ris_block: phi length must equal N_phi");
  if (phi.size() == 0) return chan.H_d;
  check_unit_modulus(phi);
  return chan.H_d + chan.H_2 * phi.asDiagonal() * chan.H_1;
}

CMat effective_channel(const ChannelRealization& chan, const CVec& phi) {
  const CMat blk = ris_block(chan, phi);
  const int K = chan.params.k_uses;
  CMat He = CMat::Zero(K * blk.rows(), K * blk.cols());
  for (int k = 0; k < K; ++k)
    He.block(k * blk.rows(), k * blk.cols(), blk.rows(), blk.cols()) = blk;
  return He;
}

CMat apply_effective(const CMat& block, int k_uses, const CMat& X) {
  const Eigen::Index nt = X.rows() / k_uses;
  if (nt != block.cols() || nt * k_uses != X.rows())
    throw std::invalid_argument("apply_effective: stacked input shape mismatch");
  CMat Y(k_uses * block.rows(), X.cols());
  for (int k = 0; k < k_uses; ++k)
    Y.middleRows(k * block.rows(), block.rows()) = block * X.middleRows(k * nt, nt);
  return Y;
}

double noise_sigma2(const ChannelParams& params) {
  const double snr_lin = std::pow(10.0, params.snr_db / 10.0);
  return params.power / (params.k_uses * snr_lin);
}

CVec sample_noise(const NoiseModel& model, Rng& rng) {
  return rng.cnormal_vec(model.dim, model.sigma2);
}

CMat sample_noise_mat(const NoiseModel& model, Eigen::Index n, Rng& rng) {
  return rng.cnormal_mat(model.dim, n, model.sigma2);
}

double compression_factor(const ChannelParams& params, int n_theta) {
  return static_cast<double>(params.k_uses * params.n_t) / (n_theta / 2.0);
}

}  // namespace semeq
