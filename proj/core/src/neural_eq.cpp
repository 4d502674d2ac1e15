#include "semeq/neural_eq.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "binio.hpp"
#include "semeq/rng.hpp"

namespace semeq {

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_prime(double x) {
  return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)) +
         x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// modGELU: GELU on the magnitude, phase untouched. As |t| -> 0 the map
// approaches 0.5 * t (GELU'(0) = 1/2).
CMat modgelu(const CMat& T) {
  CMat out(T.rows(), T.cols());
  for (Eigen::Index j = 0; j < T.cols(); ++j)
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
      const cplx t = T(i, j);
      const double m = std::abs(t);
      out(i, j) = m < 1e-30 ? 0.5 * t : t * (gelu(m) / m);
    }
  return out;
}

// Conjugate-Wirtinger pullback through modGELU:
// U_T = U_H .* d1 + conj(U_H) .* d2 with d1 = (a'(m) + a(m)/m)/2 and
// d2 = t^2/(2m^2) * (a'(m) - a(m)/m).
CMat modgelu_backward(const CMat& T, const CMat& U_H) {
  CMat out(T.rows(), T.cols());
  for (Eigen::Index j = 0; j < T.cols(); ++j)
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
      const cplx t = T(i, j);
      const double m = std::abs(t);
      double d1 = 0.5;
      cplx d2 = 0.0;
      if (m >= 1e-30) {
        const double am = gelu(m) / m;
        const double ap = gelu_prime(m);
        d1 = 0.5 * (ap + am);
        d2 = (t * t) / (2.0 * m * m) * (ap - am);
      }
      out(i, j) = U_H(i, j) * d1 + std::conj(U_H(i, j)) * d2;
    }
  return out;
}

CMat dense(const ComplexDense& l, const CMat& Z) {
  return (l.W * Z).colwise() + l.b;
}

// Adam over the real components of a complex tensor. The real-coordinate
// gradient is 2*Re / 2*Im of the conjugate-Wirtinger gradient.
struct AdamSlot {
  RVec m, v;
  void init(Eigen::Index n_real) {
    m = RVec::Zero(n_real);
    v = RVec::Zero(n_real);
  }
  void step(cplx* param, const cplx* grad, Eigen::Index n_cplx, const TrainConfig& cfg,
            double bias1, double bias2) {
    double* p = reinterpret_cast<double*>(param);
    const double* u = reinterpret_cast<const double*>(grad);
    for (Eigen::Index i = 0; i < 2 * n_cplx; ++i) {
      const double g = 2.0 * u[i];
      m(i) = cfg.beta1 * m(i) + (1.0 - cfg.beta1) * g;
      v(i) = cfg.beta2 * v(i) + (1.0 - cfg.beta2) * g * g;
      p[i] -= cfg.tau * (m(i) / bias1) / (std::sqrt(v(i) / bias2) + cfg.eps);
    }
  }
};

struct Snapshot {
  ComplexDense f1, f2, g1, g2;
  CVec phi_raw;
  double ema_scale;
};

Snapshot take_snapshot(const NeuralEqualizer& eq) {
  return {eq.f1, eq.f2, eq.g1, eq.g2, eq.phi_raw, eq.ema_scale};
}

void restore_snapshot(NeuralEqualizer& eq, const Snapshot& s) {
  eq.f1 = s.f1;
  eq.f2 = s.f2;
  eq.g1 = s.g1;
  eq.g2 = s.g2;
  eq.phi_raw = s.phi_raw;
  eq.ema_scale = s.ema_scale;
}

ComplexDense glorot_layer(Rng& rng, Eigen::Index out_dim, Eigen::Index in_dim) {
  ComplexDense l;
  l.W = rng.cnormal_mat(out_dim, in_dim, 1.0 / static_cast<double>(in_dim + out_dim));
  l.b = CVec::Zero(out_dim);
  l.mask = RMat::Ones(out_dim, in_dim);
  return l;
}

}  // namespace

CVec NeuralEqualizer::phases() const { return project_phases(phi_raw); }

CMat NeuralEqualizer::encode(const RMat& S_theta) const {
  if (S_theta.rows() != mu_theta.size())
    throw std::invalid_argument("encode: latent dimension mismatch");
  const CMat Zin = real_to_complex_cols(weq * (S_theta.colwise() - mu_theta));
  const CMat S2 = dense(f2, modgelu(dense(f1, Zin)));
  return ema_scale * S2;
}

RMat NeuralEqualizer::decode(const CMat& Y) const {
  if (Y.rows() != g1.W.cols()) throw std::invalid_argument("decode: symbol dimension mismatch");
  const CMat Zhat = dense(g2, modgelu(dense(g1, Y)));
  RMat S = complex_to_real_cols(Zhat);
  if (S.rows() > n_gamma) S.conservativeResize(n_gamma, Eigen::NoChange);
  return S;
}

double neural_loss_and_grads(const NeuralEqualizer& eq, const CMat& Z_in,
                             const CMat& Z_target, const ChannelRealization& chan,
                             const CMat& noise, ForwardStats* stats,
                             NeuralGradients* grads) {
  const int K = chan.params.k_uses;
  const int n_t = chan.params.n_t;
  const int n_r = chan.params.n_r;
  const int n_phi = chan.params.n_phi;
  const Eigen::Index B = Z_in.cols();
  const double P = eq.power;

  const CVec p = project_phases(eq.phi_raw);
  const CMat block = ris_block(chan, p);

  const CMat T1 = dense(eq.f1, Z_in);
  const CMat H1 = modgelu(T1);
  const CMat S2 = dense(eq.f2, H1);
  const double tsum = std::max(S2.squaredNorm(), 1e-30);
  const double c = std::sqrt(P * static_cast<double>(B) / tsum);
  const CMat X = c * S2;
  if (stats) {
    stats->scale = c;
    stats->batch_power = X.squaredNorm() / static_cast<double>(B);
    stats->max_phase_err =
        p.size() ? (p.array().abs() - 1.0).abs().maxCoeff() : 0.0;
  }
  const CMat Y = apply_effective(block, K, X) + noise;
  const CMat T3 = dense(eq.g1, Y);
  const CMat H3 = modgelu(T3);
  const CMat Zhat = dense(eq.g2, H3);
  const double loss = (Zhat - Z_target).squaredNorm() / static_cast<double>(B);
  if (!grads) return loss;

  const CMat U_Zhat = (Zhat - Z_target) / static_cast<double>(B);
  grads->dV2 = U_Zhat * H3.adjoint();
  grads->dc2 = U_Zhat.rowwise().sum();
  const CMat U_T3 = modgelu_backward(T3, eq.g2.W.adjoint() * U_Zhat);
  grads->dV1 = U_T3 * Y.adjoint();
  grads->dc1 = U_T3.rowwise().sum();
  const CMat U_Y = eq.g1.W.adjoint() * U_T3;

  CMat U_X(K * n_t, B);
  for (int k = 0; k < K; ++k)
    U_X.middleRows(k * n_t, n_t).noalias() = block.adjoint() * U_Y.middleRows(k * n_r, n_r);

  grads->dp = CVec::Zero(n_phi);
  if (n_phi > 0) {
    for (int k = 0; k < K; ++k) {
      const CMat A = chan.H_2.adjoint() * U_Y.middleRows(k * n_r, n_r);  // n_phi x B
      const CMat Q = chan.H_1 * X.middleRows(k * n_t, n_t);
      grads->dp += (A.array() * Q.array().conjugate()).rowwise().sum().matrix();
    }
  }

  const double re_ip = (U_X.array() * S2.array().conjugate()).sum().real();
  const CMat U_S = c * U_X - (c * re_ip / tsum) * S2;
  grads->dW2 = U_S * H1.adjoint();
  grads->db2 = U_S.rowwise().sum();
  const CMat U_T1 = modgelu_backward(T1, eq.f2.W.adjoint() * U_S);
  grads->dW1 = U_T1 * Z_in.adjoint();
  grads->db1 = U_T1.rowwise().sum();

  grads->dphi = CVec::Zero(n_phi);
  for (int i = 0; i < n_phi; ++i) {
    const cplx f = eq.phi_raw(i);
    const double m = std::abs(f);
    if (m < 1e-12) continue;  // projection is flat-guarded at the origin
    grads->dphi(i) =
        grads->dp(i) / (2.0 * m) - std::conj(grads->dp(i)) * (f * f) / (2.0 * m * m * m);
  }
  return loss;
}

std::int64_t active_weights(const NeuralEqualizer& eq) {
  std::int64_t n = 0;
  for (const ComplexDense* l : {&eq.f1, &eq.f2, &eq.g1, &eq.g2})
    n += static_cast<std::int64_t>(l->mask.sum() + 0.5);
  return n;
}

double weight_sparsity(const NeuralEqualizer& eq) {
  const std::int64_t total = eq.f1.W.size() + eq.f2.W.size() + eq.g1.W.size() + eq.g2.W.size();
  return 1.0 - static_cast<double>(active_weights(eq)) / static_cast<double>(total);
}

NeuralEqualizer train_neural(const RMat& S_theta_train, const RMat& S_gamma_train,
                             const RMat& S_theta_val, const RMat& S_gamma_val,
                             const ChannelRealization& chan, const TrainConfig& cfg) {
  if (S_theta_train.cols() != S_gamma_train.cols() ||
      S_theta_val.cols() != S_gamma_val.cols())
    throw std::invalid_argument("train_neural: pilot sample counts differ");
  if (cfg.batch < 1 || S_theta_train.cols() < cfg.batch)
    throw std::invalid_argument("train_neural: need at least one full batch");
  if (S_theta_val.cols() < 1)
    throw std::invalid_argument("train_neural: validation split is empty");

  const ChannelParams& par = chan.params;
  const double sigma2 = noise_sigma2(par);
  const int n_train = static_cast<int>(S_theta_train.cols());
  const int K = par.k_uses;

  NeuralEqualizer eq;
  eq.n_theta = static_cast<int>(S_theta_train.rows());
  eq.n_gamma = static_cast<int>(S_gamma_train.rows());
  eq.k_uses = K;
  eq.n_t = par.n_t;
  eq.n_r = par.n_r;
  eq.power = par.power;

  const Whitener wh = fit_whitener(S_theta_train);
  eq.mu_theta = wh.mean;
  eq.weq = wh.W / std::sqrt(2.0);

  const CMat Zin = real_to_complex_cols(eq.weq * (S_theta_train.colwise() - eq.mu_theta));
  const CMat Ztgt = real_to_complex_cols(S_gamma_train);
  const Eigen::Index d_in = Zin.rows();
  const Eigen::Index d_out = Ztgt.rows();  // hidden width == target width
  const Eigen::Index d_tx = static_cast<Eigen::Index>(K) * par.n_t;
  const Eigen::Index d_rx = static_cast<Eigen::Index>(K) * par.n_r;

  Rng winit(mix_seed(cfg.seed, 11));
  eq.f1 = glorot_layer(winit, d_out, d_in);
  eq.f2 = glorot_layer(winit, d_tx, d_out);
  eq.g1 = glorot_layer(winit, d_out, d_rx);
  eq.g2 = glorot_layer(winit, d_out, d_out);
  Rng pinit(mix_seed(cfg.seed, 12));
  eq.phi_raw = pinit.unit_phase_vec(par.n_phi);

  Rng shuffle_rng(mix_seed(cfg.seed, 13));
  Rng noise_rng(mix_seed(cfg.seed, 14));
  Rng val_noise_rng(mix_seed(cfg.seed, 15));
  const CMat val_noise = val_noise_rng.cnormal_mat(d_rx, S_theta_val.cols(), sigma2);

  AdamSlot aW1, ab1, aW2, ab2, aV1, ac1, aV2, ac2, aphi;
  aW1.init(2 * eq.f1.W.size());
  ab1.init(2 * eq.f1.b.size());
  aW2.init(2 * eq.f2.W.size());
  ab2.init(2 * eq.f2.b.size());
  aV1.init(2 * eq.g1.W.size());
  ac1.init(2 * eq.g1.b.size());
  aV2.init(2 * eq.g2.W.size());
  ac2.init(2 * eq.g2.b.size());
  aphi.init(2 * eq.phi_raw.size());

  const int n_batches = n_train / cfg.batch;
  bool ema_started = false;
  double best_val = std::numeric_limits<double>::infinity();
  Snapshot best = take_snapshot(eq);
  int wait = 0;
  std::int64_t prev_active = active_weights(eq);
  std::int64_t adam_t = 0;

  NeuralGradients g;
  CMat Zin_b(d_in, cfg.batch), Ztgt_b(d_out, cfg.batch);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const std::vector<int> perm = shuffle_rng.permutation(n_train);
    double epoch_loss = 0.0;

    for (int b = 0; b < n_batches; ++b) {
      for (int j = 0; j < cfg.batch; ++j) {
        const int s = perm[static_cast<std::size_t>(b * cfg.batch + j)];
        Zin_b.col(j) = Zin.col(s);
        Ztgt_b.col(j) = Ztgt.col(s);
      }
      const CMat noise = noise_rng.cnormal_mat(d_rx, cfg.batch, sigma2);

      ForwardStats st;
      const double loss = neural_loss_and_grads(eq, Zin_b, Ztgt_b, chan, noise, &st, &g);
      if (!std::isfinite(loss))
        throw std::runtime_error("train_neural: non-finite loss at epoch " +
                                 std::to_string(epoch) + " batch " + std::to_string(b));
      epoch_loss += loss;

      g.dW1.array() *= eq.f1.mask.array();
      g.dW2.array() *= eq.f2.mask.array();
      g.dV1.array() *= eq.g1.mask.array();
      g.dV2.array() *= eq.g2.mask.array();

      ++adam_t;
      const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam_t));
      const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam_t));
      aW1.step(eq.f1.W.data(), g.dW1.data(), eq.f1.W.size(), cfg, bias1, bias2);
      ab1.step(eq.f1.b.data(), g.db1.data(), eq.f1.b.size(), cfg, bias1, bias2);
      aW2.step(eq.f2.W.data(), g.dW2.data(), eq.f2.W.size(), cfg, bias1, bias2);
      ab2.step(eq.f2.b.data(), g.db2.data(), eq.f2.b.size(), cfg, bias1, bias2);
      aV1.step(eq.g1.W.data(), g.dV1.data(), eq.g1.W.size(), cfg, bias1, bias2);
      ac1.step(eq.g1.b.data(), g.dc1.data(), eq.g1.b.size(), cfg, bias1, bias2);
      aV2.step(eq.g2.W.data(), g.dV2.data(), eq.g2.W.size(), cfg, bias1, bias2);
      ac2.step(eq.g2.b.data(), g.dc2.data(), eq.g2.b.size(), cfg, bias1, bias2);
      if (eq.phi_raw.size() > 0)
        aphi.step(eq.phi_raw.data(), g.dphi.data(), eq.phi_raw.size(), cfg, bias1, bias2);

      // pruning: kill small weights permanently, keep dead ones at zero
      if (cfg.beta > 0.0) {
        const double thresh = cfg.beta * cfg.tau;
        for (ComplexDense* l : {&eq.f1, &eq.f2, &eq.g1, &eq.g2})
          l->mask = (l->mask.array() * (l->W.array().abs() >= thresh).cast<double>()).matrix();
      }
      for (ComplexDense* l : {&eq.f1, &eq.f2, &eq.g1, &eq.g2})
        l->W.array() *= l->mask.array();
      const std::int64_t active = active_weights(eq);
      if (active > prev_active) eq.mask_monotone = false;
      prev_active = active;

      eq.ema_scale = ema_started ? cfg.ema_momentum * eq.ema_scale +
                                       (1.0 - cfg.ema_momentum) * st.scale
                                 : st.scale;
      ema_started = true;
      eq.max_power_dev =
          std::max(eq.max_power_dev, std::abs(st.batch_power - eq.power) / eq.power);
      eq.max_phase_dev = std::max(eq.max_phase_dev, st.max_phase_err);
    }

    eq.train_history.push_back(epoch_loss / n_batches);

    // validation with the frozen-scale inference path and a fixed noise draw
    const CMat Xv = eq.encode(S_theta_val);
    const CMat Yv = apply_effective(ris_block(chan, eq.phases()), K, Xv) + val_noise;
    const RMat Sv = eq.decode(Yv);
    const double val = (Sv - S_gamma_val).colwise().squaredNorm().mean();
    eq.val_history.push_back(val);

    if (val < best_val) {
      best_val = val;
      best = take_snapshot(eq);
      wait = 0;
    } else if (++wait >= cfg.patience) {
      eq.epochs_run = epoch + 1;
      break;
    }
    eq.epochs_run = epoch + 1;
  }

  restore_snapshot(eq, best);
  eq.best_val = best_val;

  for (const ComplexDense* l : {&eq.f1, &eq.f2, &eq.g1, &eq.g2})
    for (Eigen::Index i = 0; i < l->W.size(); ++i)
      if (l->mask.data()[i] == 0.0 && l->W.data()[i] != cplx(0.0, 0.0))
        eq.pruned_stay_zero = false;

  return eq;
}

void save_neural(const NeuralEqualizer& eq, const std::string& path) {
  binio::Writer w(path);
  w.magic("SEMEQNN1");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(eq.k_uses));
  w.u32(static_cast<std::uint32_t>(eq.n_t));
  w.u32(static_cast<std::uint32_t>(eq.n_r));
  w.u32(static_cast<std::uint32_t>(eq.phi_raw.size()));
  w.u32(static_cast<std::uint32_t>(eq.n_theta));
  w.u32(static_cast<std::uint32_t>(eq.n_gamma));
  w.u32(static_cast<std::uint32_t>(eq.g2.W.rows()));
  w.f64(eq.power);
  w.f64(eq.ema_scale);
  for (const ComplexDense* l : {&eq.f1, &eq.f2, &eq.g1, &eq.g2}) {
    w.f64_array(reinterpret_cast<const double*>(l->W.data()),
                2 * static_cast<std::size_t>(l->W.size()));
    w.f64_array(reinterpret_cast<const double*>(l->b.data()),
                2 * static_cast<std::size_t>(l->b.size()));
    for (Eigen::Index i = 0; i < l->mask.size(); ++i)
      w.u8(l->mask.data()[i] != 0.0 ? 1 : 0);
  }
  w.f64_array(reinterpret_cast<const double*>(eq.phi_raw.data()),
              2 * static_cast<std::size_t>(eq.phi_raw.size()));
  w.f64_array(eq.weq.data(), static_cast<std::size_t>(eq.weq.size()));
  w.f64_array(eq.mu_theta.data(), static_cast<std::size_t>(eq.mu_theta.size()));
}

NeuralEqualizer load_neural(const std::string& path) {
  binio::Reader r(path);
  r.expect_magic("SEMEQNN1");
  r.expect_version(1);
  NeuralEqualizer eq;
  eq.k_uses = static_cast<int>(r.u32());
  eq.n_t = static_cast<int>(r.u32());
  eq.n_r = static_cast<int>(r.u32());
  const int n_phi = static_cast<int>(r.u32());
  eq.n_theta = static_cast<int>(r.u32());
  eq.n_gamma = static_cast<int>(r.u32());
  const int hidden = static_cast<int>(r.u32());
  if (eq.k_uses < 1 || eq.n_t < 1 || eq.n_r < 1 || n_phi < 0 || eq.n_theta < 1 ||
      eq.n_gamma < 1 || hidden < 1 || eq.n_theta > (1 << 20) || eq.n_gamma > (1 << 20))
    throw IoError(path, "implausible equalizer dimensions");
  eq.power = r.f64();
  eq.ema_scale = r.f64();
  const Eigen::Index d_in = (eq.n_theta + 1) / 2;
  const Eigen::Index d_tx = static_cast<Eigen::Index>(eq.k_uses) * eq.n_t;
  const Eigen::Index d_rx = static_cast<Eigen::Index>(eq.k_uses) * eq.n_r;
  const Eigen::Index shapes[4][2] = {
      {hidden, d_in}, {d_tx, hidden}, {hidden, d_rx}, {hidden, hidden}};
  ComplexDense* layers[4] = {&eq.f1, &eq.f2, &eq.g1, &eq.g2};
  for (int li = 0; li < 4; ++li) {
    ComplexDense& l = *layers[li];
    l.W.resize(shapes[li][0], shapes[li][1]);
    l.b.resize(shapes[li][0]);
    l.mask.resize(shapes[li][0], shapes[li][1]);
    r.f64_array(reinterpret_cast<double*>(l.W.data()), 2 * static_cast<std::size_t>(l.W.size()));
    r.f64_array(reinterpret_cast<double*>(l.b.data()), 2 * static_cast<std::size_t>(l.b.size()));
    for (Eigen::Index i = 0; i < l.mask.size(); ++i) l.mask.data()[i] = r.u8() ? 1.0 : 0.0;
  }
  eq.phi_raw.resize(n_phi);
  r.f64_array(reinterpret_cast<double*>(eq.phi_raw.data()),
              2 * static_cast<std::size_t>(eq.phi_raw.size()));
  eq.weq.resize(eq.n_theta, eq.n_theta);
  eq.mu_theta.resize(eq.n_theta);
  r.f64_array(eq.weq.data(), static_cast<std::size_t>(eq.weq.size()));
  r.f64_array(eq.mu_theta.data(), static_cast<std::size_t>(eq.mu_theta.size()));
  return eq;
}

}  // namespace semeq
