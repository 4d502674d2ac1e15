#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

namespace semeq {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using cplx = std::complex<double>;

inline constexpr double kTolSvd = 1e-10;
inline constexpr double kTolSylvester = 1e-9;
inline constexpr double kTolWhiten = 1e-8;
inline constexpr double kWhitenFloor = 1e-10;

// Real <-> complex latent packing: the first half of a (zero-padded) real
// vector becomes the real parts, the second half the imaginary parts.
// [1,2,3,4] -> [1+3i, 2+4i]; odd lengths are padded: [1,2,3] -> [1+3i, 2+0i].
CVec real_to_complex(const RVec& s);
RVec complex_to_real(const CVec& z);

// Column-wise variants for sample matrices (one sample per column).
CMat real_to_complex_cols(const RMat& S);
RMat complex_to_real_cols(const CMat& Z);

struct SvdResult {
  CMat U;      // orthonormal columns
  RVec sigma;  // nonincreasing, nonnegative
  CMat V;      // orthonormal columns
};

// Thin SVD, A = U diag(sigma) V^H.
SvdResult svd(const CMat& A);

// Solves A X + X B = C where A is Hermitian PSD and B Hermitian PD, via
// eigendecomposition of the pair (simpler and more stable than Schur for
// Hermitian operands; every call site here is Hermitian).
CMat solve_sylvester(const CMat& A, const CMat& B, const CMat& C);

struct Whitener {
  RMat W;              // symmetric whitening transform
  RVec mean;           // removed before W is applied
  bool floored = false;  // eigenvalue floor engaged (rank-deficient input)
};

// Mean-removal + symmetric (eigendecomposition) whitening with eigenvalue
// floor; sample covariance of W*(S - mean) is the identity for full-rank S.
Whitener fit_whitener(const RMat& S, double floor_eps = kWhitenFloor);
RMat apply_whitener(const Whitener& w, const RMat& S);

}  // namespace semeq
