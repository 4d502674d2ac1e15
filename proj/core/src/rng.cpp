#include "semeq/rng.hpp"

#include <cmath>

namespace semeq {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::complex<double> Rng::cnormal(double var) {
  const double s = std::sqrt(var / 2.0);
  const double re = s * normal();
  const double im = s * normal();
  return {re, im};
}

std::int64_t Rng::below(std::int64_t n) {
  // rejection sampling keeps the draw unbiased for any n
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t x = gen_();
  while (x >= limit) x = gen_();
  return static_cast<std::int64_t>(x % un);
}

std::complex<double> Rng::unit_phase() {
  const double a = uniform(0.0, 2.0 * M_PI);
  return {std::cos(a), std::sin(a)};
}

Eigen::VectorXd Rng::normal_vec(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Eigen::MatrixXd Rng::normal_mat(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal();
  return m;
}

Eigen::MatrixXcd Rng::cnormal_mat(Eigen::Index rows, Eigen::Index cols, double var) {
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = cnormal(var);
  return m;
}

Eigen::VectorXcd Rng::cnormal_vec(Eigen::Index n, double var) {
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = cnormal(var);
  return v;
}

Eigen::VectorXcd Rng::unit_phase_vec(Eigen::Index n) {
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = unit_phase();
  return v;
}

std::vector<int> Rng::permutation(int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(below(i + 1));
    std::swap(p[i], p[j]);
  }
  return p;
}

}  // namespace semeq
