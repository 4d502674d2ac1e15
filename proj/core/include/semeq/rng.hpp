#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace semeq {

// SplitMix64 mixing step; used to derive independent substream seeds so that
// channel draws, noise draws, and initializations never share a stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Deterministic random source. std::normal_distribution is implementation-
// defined, so normals are generated with an explicit Box-Muller transform on
// top of mt19937_64 to keep every experiment bit-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform double in [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (cached spare)
  double normal();

  // circular complex Gaussian with total variance `var` (var/2 per part)
  std::complex<double> cnormal(double var = 1.0);

  // integer in [0, n)
  std::int64_t below(std::int64_t n);

  // unit-modulus complex number with uniform phase
  std::complex<double> unit_phase();

  Eigen::VectorXd normal_vec(Eigen::Index n);
  Eigen::MatrixXd normal_mat(Eigen::Index rows, Eigen::Index cols);
  Eigen::MatrixXcd cnormal_mat(Eigen::Index rows, Eigen::Index cols, double var = 1.0);
  Eigen::VectorXcd cnormal_vec(Eigen::Index n, double var = 1.0);
  Eigen::VectorXcd unit_phase_vec(Eigen::Index n);

  // Fisher-Yates permutation of 0..n-1
  std::vector<int> permutation(int n);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace semeq
