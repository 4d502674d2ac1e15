#include "semeq/linalg.hpp"

namespace semeq {

CVec real_to_complex(const RVec& s) {
  const Eigen::Index n = s.size();
  const Eigen::Index m = (n + 1) / 2;
  CVec z(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double re = s[i];
    const Eigen::Index j = m + i;
    const double im = j < n ? s[j] : 0.0;
    z[i] = cplx(re, im);
  }
  return z;
}

RVec complex_to_real(const CVec& z) {
  const Eigen::Index m = z.size();
  RVec s(2 * m);
  s.head(m) = z.real();
  s.tail(m) = z.imag();
  return s;
}

CMat real_to_complex_cols(const RMat& S) {
  const Eigen::Index n = S.rows();
  const Eigen::Index m = (n + 1) / 2;
  CMat Z(m, S.cols());
  Z.real() = S.topRows(m);
  if (2 * m == n) {
    Z.imag() = S.bottomRows(m);
  } else {
    Z.imag().topRows(m - 1) = S.bottomRows(m - 1);
    Z.imag().row(m - 1).setZero();
  }
  return Z;
}

RMat complex_to_real_cols(const CMat& Z) {
  RMat S(2 * Z.rows(), Z.cols());
  S.topRows(Z.rows()) = Z.real();
  S.bottomRows(Z.rows()) = Z.imag();
  return S;
}

SvdResult svd(const CMat& A) {
  Eigen::JacobiSVD<CMat> dec(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {dec.matrixU(), dec.singularValues(), dec.matrixV()};
}

CMat solve_sylvester(const CMat& A, const CMat& B, const CMat& C) {
  if (A.rows() != A.cols() || B.rows() != B.cols())
    throw std::invalid_argument("solve_sylvester: A and B must be square");
  if (C.rows() != A.rows() || C.cols() != B.rows())
    throw std::invalid_argument("solve_sylvester: C shape mismatch");

  Eigen::SelfAdjointEigenSolver<CMat> ea(A);
  Eigen::SelfAdjointEigenSolver<CMat> eb(B);
  if (ea.info() != Eigen::Success || eb.info() != Eigen::Success)
    throw std::runtime_error("solve_sylvester: eigendecomposition failed");

  const RVec& la = ea.eigenvalues();
  const RVec& lb = eb.eigenvalues();
  const double scale = std::max(la.cwiseAbs().maxCoeff(), lb.cwiseAbs().maxCoeff());
  CMat Ct = ea.eigenvectors().adjoint() * C * eb.eigenvectors();
  for (Eigen::Index j = 0; j < Ct.cols(); ++j)
    for (Eigen::Index i = 0; i < Ct.rows(); ++i) {
      const double d = la[i] + lb[j];
      if (std::abs(d) <= 1e-14 * std::max(scale, 1.0))
        throw std::runtime_error("solve_sylvester: spectra of A and -B overlap");
      Ct(i, j) /= d;
    }
  return ea.eigenvectors() * Ct * eb.eigenvectors().adjoint();
}

Whitener fit_whitener(const RMat& S, double floor_eps) {
  if (S.cols() < 2) throw std::invalid_argument("fit_whitener: need N >= 2 samples");
  Whitener out;
  out.mean = S.rowwise().mean();
  const RMat X = S.colwise() - out.mean;
  const RMat C = X * X.transpose() / static_cast<double>(S.cols());
  Eigen::SelfAdjointEigenSolver<RMat> eig(C);
  RVec w = eig.eigenvalues();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] < floor_eps) {
      w[i] = floor_eps;
      out.floored = true;
    }
  }
  const RMat& V = eig.eigenvectors();
  out.W = V * w.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
  return out;
}

RMat apply_whitener(const Whitener& w, const RMat& S) {
  return w.W * (S.colwise() - w.mean);
}

}  // namespace semeq
