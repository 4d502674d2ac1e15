#include "doctest.h"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/KroneckerProduct>

#include "semeq/linalg.hpp"
#include "semeq/rng.hpp"

using namespace semeq;

TEST_CASE("real<->complex packing round-trips and keeps norms") {
  Rng rng(1);
  const RMat S = rng.normal_mat(8, 5);
  const CMat Z = real_to_complex_cols(S);
  REQUIRE(Z.rows() == 4);
  REQUIRE(Z.cols() == 5);
  // top half of the real stack is the real part, bottom half the imaginary
  CHECK(Z(1, 2).real() == S(1, 2));
  CHECK(Z(1, 2).imag() == S(5, 2));
  CHECK(Z.norm() == doctest::Approx(S.norm()).epsilon(1e-15));
  const RMat back = complex_to_real_cols(Z);
  CHECK((back - S).norm() == 0.0);
}

TEST_CASE("svd reconstructs and orders") {
  Rng rng(2);
  const CMat A = rng.cnormal_mat(6, 4);
  const SvdResult s = svd(A);
  const CMat rec = s.U * s.sigma.asDiagonal() * s.V.adjoint();
  CHECK((rec - A).norm() / A.norm() < 1e-12);
  for (Eigen::Index i = 0; i + 1 < s.sigma.size(); ++i) {
    CHECK(s.sigma[i] >= s.sigma[i + 1]);
    CHECK(s.sigma[i + 1] >= 0.0);
  }
}

TEST_CASE("solve_sylvester matches the Kronecker-system oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const int m = 4, n = 6;
    CMat Ar = rng.cnormal_mat(m, m);
    CMat Br = rng.cnormal_mat(n, n);
    const CMat A = Ar * Ar.adjoint() + 0.1 * CMat::Identity(m, m);
    const CMat B = Br * Br.adjoint() + 0.1 * CMat::Identity(n, n);
    const CMat C = rng.cnormal_mat(m, n);

    const CMat F = solve_sylvester(A, B, C);

    // vec(AF + FB) = (I (x) A + B^T (x) I) vec(F), column-major vec
    const CMat lhs = Eigen::kroneckerProduct(CMat::Identity(n, n), A) +
                     Eigen::kroneckerProduct(B.transpose(), CMat::Identity(m, m));
    const CVec vecC = Eigen::Map<const CVec>(C.data(), C.size());
    const CVec vecF = lhs.fullPivLu().solve(vecC);
    const CMat F_oracle = Eigen::Map<const CMat>(vecF.data(), m, n);

    CHECK((F - F_oracle).norm() / F_oracle.norm() < 1e-10);
    CHECK((A * F + F * B - C).norm() / C.norm() < kTolSylvester);
  }
}

TEST_CASE("whitener flattens the empirical covariance") {
  Rng rng(4);
  const int d = 6, n = 500;
  RMat mixing = rng.normal_mat(d, d);
  RMat S = mixing * rng.normal_mat(d, n);
  S.colwise() += RVec::Constant(d, 2.5);

  const Whitener w = fit_whitener(S);
  CHECK_FALSE(w.floored);
  const RMat Z = apply_whitener(w, S);
  CHECK(Z.rowwise().mean().norm() < 1e-12);
  const RMat cov = Z * Z.transpose() / static_cast<double>(n);
  CHECK((cov - RMat::Identity(d, d)).norm() < 1e-10);
}

TEST_CASE("whitener floors collapsed directions and reports it") {
  Rng rng(5);
  RMat S = rng.normal_mat(4, 100);
  S.row(3).setZero();  // one direction carries no energy at all
  const Whitener w = fit_whitener(S);
  CHECK(w.floored);
  const RMat Z = apply_whitener(w, S);
  CHECK(Z.allFinite());
}

TEST_CASE("folded whitener makes packed pilots exactly white") {
  // the ADMM derivation relies on Z Z^H == N I after the 1/sqrt(2) fold
  Rng rng(6);
  const int d = 10, n = 400;
  RMat S = rng.normal_mat(d, d) * rng.normal_mat(d, n);
  S.colwise() += RVec::Constant(d, -1.0);
  const Whitener w = fit_whitener(S);
  const RMat weq = w.W / std::numbers::sqrt2;
  const CMat Z = real_to_complex_cols(weq * (S.colwise() - w.mean));
  const CMat gram = Z * Z.adjoint();
  CHECK((gram - static_cast<double>(n) * CMat::Identity(d / 2, d / 2)).norm() < 1e-8);
}
