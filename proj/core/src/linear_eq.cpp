#include "semeq/linear_eq.hpp"

#include <cmath>

#include "binio.hpp"
#include "semeq/rng.hpp"

namespace semeq {

namespace {

// Hermitian solve X A = Y  =>  X = Y A^{-1}, with an eigenvalue ridge when A
// is numerically singular. Shared by the decoder step and the pilot Gram.
CMat solve_right_hermitian(const CMat& Y, const CMat& A, bool* ridged) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(A);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("hermitian eigensolve failed");
  const RVec& w = eig.eigenvalues();
  const double wmax = w(w.size() - 1);
  double ridge = 0.0;
  if (w(0) <= wmax * 1e-14) {
    ridge = wmax > 0 ? wmax * 1e-12 : 1e-12;
    if (ridged) *ridged = true;
  }
  const CMat& V = eig.eigenvectors();
  RVec inv = (w.array() + ridge).inverse();
  return (Y * V) * inv.asDiagonal() * V.adjoint();
}

CMat blockwise_left(const CMat& G, const CMat& block, int k_uses) {
  // G (I_K (x) block) without materializing the Kronecker product
  const Eigen::Index nr = block.rows();
  const Eigen::Index nt = block.cols();
  CMat out(G.rows(), k_uses * nt);
  for (int k = 0; k < k_uses; ++k)
    out.middleCols(k * nt, nt).noalias() = G.middleCols(k * nr, nr) * block;
  return out;
}

}  // namespace

CMat LinearEqualizer::encode(const RMat& S_theta) const {
  if (S_theta.rows() != mu_theta.size())
    throw std::invalid_argument("encode: latent dimension mismatch");
  const RMat centered = S_theta.colwise() - mu_theta;
  return F * real_to_complex_cols(weq * centered);
}

RMat LinearEqualizer::decode(const CMat& Y) const {
  if (Y.rows() != G.cols()) throw std::invalid_argument("decode: symbol dimension mismatch");
  RMat S = complex_to_real_cols(G * Y);
  if (S.rows() > mu_gamma.size()) S.conservativeResize(mu_gamma.size(), Eigen::NoChange);
  return S.colwise() + mu_gamma;
}

double admm_objective(const CMat& Z_theta, const CMat& Z_gamma, const CMat& F,
                      const CMat& G, const CVec& phi, const ChannelRealization& chan,
                      double sigma2) {
  const CMat block = ris_block(chan, phi);
  const CMat Ztil = apply_effective(block, chan.params.k_uses, F * Z_theta);
  const double n = static_cast<double>(Z_theta.cols());
  return (Z_gamma - G * Ztil).squaredNorm() / n + sigma2 * G.squaredNorm();
}

CMat g_step(const CMat& Ztil, const CMat& Z_gamma, double n_sigma2, bool* ridged) {
  CMat gram = Ztil * Ztil.adjoint();
  gram.diagonal().array() += n_sigma2;
  return solve_right_hermitian(Z_gamma * Ztil.adjoint(), gram, ridged);
}

CMat r_step(const CMat& F, const CMat& S, double p_budget) {
  CMat V = F + S;
  const double p = V.squaredNorm();
  if (p <= p_budget) return V;
  return V * std::sqrt(p_budget / p);
}

RisSystem build_ris_system(const CMat& Z_theta, const CMat& Z_gamma, const CMat& F,
                           const CMat& G, const ChannelRealization& chan) {
  const int k = chan.params.k_uses;
  const int n_t = chan.params.n_t;
  const int n_r = chan.params.n_r;
  const int n_phi = chan.params.n_phi;
  const Eigen::Index n = Z_theta.cols();
  const Eigen::Index ng = Z_gamma.rows();

  const CMat X = F * Z_theta;  // (K n_t) x N
  CMat resid = Z_gamma;
  for (int u = 0; u < k; ++u)
    resid.noalias() -= G.middleCols(u * n_r, n_r) * (chan.H_d * X.middleRows(u * n_t, n_t));

  RisSystem sys;
  sys.v = Eigen::Map<const CVec>(resid.data(), resid.size());
  sys.D.resize(ng * n, n_phi);
  for (int u = 0; u < k; ++u) {
    const CMat P = G.middleCols(u * n_r, n_r) * chan.H_2;      // ng x n_phi
    const CMat Q = chan.H_1 * X.middleRows(u * n_t, n_t);      // n_phi x N
    for (int j = 0; j < n_phi; ++j) {
      // vec of the rank-one contribution P(:,j) Q(j,:), column-major
      Eigen::Map<CMat> col(sys.D.col(j).data(), ng, n);
      if (u == 0)
        col.noalias() = P.col(j) * Q.row(j);
      else
        col.noalias() += P.col(j) * Q.row(j);
    }
  }
  return sys;
}

CVec phi_step(const CVec& phi, const RisSystem& sys) {
  if (phi.size() == 0) return phi;
  const CMat M = sys.D.adjoint() * sys.D;
  Eigen::SelfAdjointEigenSolver<CMat> eig(M, Eigen::EigenvaluesOnly);
  const double lam = eig.eigenvalues()(M.rows() - 1);
  if (!(lam > 1e-30)) return phi;
  const CVec grad = sys.D.adjoint() * (sys.v - sys.D * phi);
  const CVec raw = phi + grad / lam;
  return project_phases(raw, &phi);
}

LinearEqualizer fit_linear(const RMat& S_theta, const RMat& S_gamma,
                           const ChannelRealization& chan, const AdmmConfig& cfg) {
  if (S_theta.cols() != S_gamma.cols())
    throw std::invalid_argument("fit_linear: pilot sample counts differ");
  if (S_theta.cols() < 2) throw std::invalid_argument("fit_linear: need at least 2 pilots");
  if (cfg.max_iters < 1) throw std::invalid_argument("fit_linear: max_iters must be >= 1");

  const ChannelParams& p = chan.params;
  const double sigma2 = noise_sigma2(p);
  const double n = static_cast<double>(S_theta.cols());
  const double P = p.power;
  const double rho = cfg.rho;

  LinearEqualizer eq;
  eq.k_uses = p.k_uses;
  eq.n_t = p.n_t;
  eq.n_r = p.n_r;
  eq.power = P;
  eq.mu_gamma = S_gamma.rowwise().mean();

  const Whitener wh = fit_whitener(S_theta);
  eq.mu_theta = wh.mean;
  eq.weq = wh.W / std::sqrt(2.0);  // fold the complex-packing variance split
  eq.ridge_warning = wh.floored;

  const CMat Zt = real_to_complex_cols(eq.weq * (S_theta.colwise() - eq.mu_theta));
  const CMat Zg = real_to_complex_cols(S_gamma.colwise() - eq.mu_gamma);
  const Eigen::Index dim_in = Zt.rows();
  const Eigen::Index dim_tx = static_cast<Eigen::Index>(p.k_uses) * p.n_t;

  Rng rng(mix_seed(cfg.seed, 777));
  CMat F = rng.cnormal_mat(dim_tx, dim_in);
  F *= std::sqrt(P / std::max(F.squaredNorm(), 1e-300));
  CMat R = F;
  CMat S = CMat::Zero(dim_tx, dim_in);
  CVec phi = rng.unit_phase_vec(p.n_phi);
  CMat G;

  const CMat gram_t = Zt * Zt.adjoint();
  const CMat cross = Zg * Zt.adjoint();
  bool gram_ridged = false;
  const CMat gram_inv =
      solve_right_hermitian(CMat::Identity(dim_in, dim_in), gram_t, &gram_ridged);
  eq.ridge_warning = eq.ridge_warning || gram_ridged;
  const CMat B = n * rho * gram_inv;

  for (int it = 0; it < cfg.max_iters; ++it) {
    const CMat block = ris_block(chan, phi);
    const CMat Ztil = apply_effective(block, p.k_uses, F * Zt);
    bool ridged = false;
    G = g_step(Ztil, Zg, n * sigma2, &ridged);
    eq.ridge_warning = eq.ridge_warning || ridged;

    const CMat GH = blockwise_left(G, block, p.k_uses);  // G He
    const CMat A = GH.adjoint() * GH;
    const CMat C = (n * rho * (R - S) + GH.adjoint() * cross) * gram_inv;
    F = solve_sylvester(A, B, C);

    R = r_step(F, S, P);
    if (p.n_phi > 0) phi = phi_step(phi, build_ris_system(Zt, Zg, F, G, chan));
    S += F - R;

    const double obj = admm_objective(Zt, Zg, F, G, phi, chan, sigma2);
    eq.history.push_back(obj);
    if (it > 0) {
      const double prev = eq.history[eq.history.size() - 2];
      if (std::abs(prev - obj) <= cfg.tol_rel * std::max(prev, 1e-30)) break;
    }
  }

  // land exactly on the power budget; the decoder absorbs the scale
  const double c = std::sqrt(P / std::max(F.squaredNorm(), 1e-300));
  F *= c;
  G /= c;

  eq.F = F;
  eq.G = G;
  eq.phi = phi;
  eq.power_dev = std::abs(F.squaredNorm() - P) / P;
  eq.phi_dev = phi.size() ? (phi.array().abs() - 1.0).abs().maxCoeff() : 0.0;
  return eq;
}

void save_linear(const LinearEqualizer& eq, const std::string& path) {
  binio::Writer w(path);
  w.magic("SEMEQLIN");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(eq.k_uses));
  w.u32(static_cast<std::uint32_t>(eq.n_t));
  w.u32(static_cast<std::uint32_t>(eq.n_r));
  w.u32(static_cast<std::uint32_t>(eq.phi.size()));
  w.u32(static_cast<std::uint32_t>(eq.mu_theta.size()));
  w.u32(static_cast<std::uint32_t>(eq.mu_gamma.size()));
  w.f64(eq.power);
  w.f64_array(reinterpret_cast<const double*>(eq.F.data()), 2 * static_cast<std::size_t>(eq.F.size()));
  w.f64_array(reinterpret_cast<const double*>(eq.G.data()), 2 * static_cast<std::size_t>(eq.G.size()));
  w.f64_array(reinterpret_cast<const double*>(eq.phi.data()), 2 * static_cast<std::size_t>(eq.phi.size()));
  w.f64_array(eq.weq.data(), static_cast<std::size_t>(eq.weq.size()));
  w.f64_array(eq.mu_theta.data(), static_cast<std::size_t>(eq.mu_theta.size()));
  w.f64_array(eq.mu_gamma.data(), static_cast<std::size_t>(eq.mu_gamma.size()));
}

LinearEqualizer load_linear(const std::string& path) {
  binio::Reader r(path);
  r.expect_magic("SEMEQLIN");
  r.expect_version(1);
  LinearEqualizer eq;
  eq.k_uses = static_cast<int>(r.u32());
  eq.n_t = static_cast<int>(r.u32());
  eq.n_r = static_cast<int>(r.u32());
  const int n_phi = static_cast<int>(r.u32());
  const int n_theta = static_cast<int>(r.u32());
  const int n_gamma = static_cast<int>(r.u32());
  if (eq.k_uses < 1 || eq.n_t < 1 || eq.n_r < 1 || n_phi < 0 || n_theta < 1 ||
      n_gamma < 1 || n_theta > (1 << 20) || n_gamma > (1 << 20))
    throw IoError(path, "implausible equalizer dimensions");
  eq.power = r.f64();
  const Eigen::Index din = (n_theta + 1) / 2;
  const Eigen::Index dg = (n_gamma + 1) / 2;
  eq.F.resize(static_cast<Eigen::Index>(eq.k_uses) * eq.n_t, din);
  eq.G.resize(dg, static_cast<Eigen::Index>(eq.k_uses) * eq.n_r);
  eq.phi.resize(n_phi);
  r.f64_array(reinterpret_cast<double*>(eq.F.data()), 2 * static_cast<std::size_t>(eq.F.size()));
  r.f64_array(reinterpret_cast<double*>(eq.G.data()), 2 * static_cast<std::size_t>(eq.G.size()));
  r.f64_array(reinterpret_cast<double*>(eq.phi.data()), 2 * static_cast<std::size_t>(eq.phi.size()));
  eq.weq.resize(n_theta, n_theta);
  eq.mu_theta.resize(n_theta);
  eq.mu_gamma.resize(n_gamma);
  r.f64_array(eq.weq.data(), static_cast<std::size_t>(eq.weq.size()));
  r.f64_array(eq.mu_theta.data(), static_cast<std::size_t>(eq.mu_theta.size()));
  r.f64_array(eq.mu_gamma.data(), static_cast<std::size_t>(eq.mu_gamma.size()));
  return eq;
}

}  // namespace semeq
