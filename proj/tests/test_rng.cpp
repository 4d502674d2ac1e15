#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semeq/linalg.hpp"
#include "semeq/rng.hpp"

using namespace semeq;

TEST_CASE("identical seeds replay identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.cnormal(2.0) == b.cnormal(2.0));
  }
}

TEST_CASE("mix_seed separates streams") {
  CHECK(mix_seed(1, 2) != mix_seed(1, 3));
  CHECK(mix_seed(1, 2) != mix_seed(2, 2));
  CHECK(mix_seed(0, 0) != 0);  // splitmix of zero is not zero
  Rng a(mix_seed(7, 1)), b(mix_seed(7, 2));
  int same = 0;
  for (int i = 0; i < 64; ++i) same += a.below(1000) == b.below(1000);
  CHECK(same < 10);
}

TEST_CASE("uniform stays in [0,1)") {
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal moments") {
  Rng rng(5);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("cnormal splits variance between parts") {
  Rng rng(6);
  const int n = 100000;
  const double var = 3.0;
  double re2 = 0.0, im2 = 0.0, cross = 0.0;
  for (int i = 0; i < n; ++i) {
    const cplx z = rng.cnormal(var);
    re2 += z.real() * z.real();
    im2 += z.imag() * z.imag();
    cross += z.real() * z.imag();
  }
  CHECK(re2 / n == doctest::Approx(var / 2).epsilon(0.03));
  CHECK(im2 / n == doctest::Approx(var / 2).epsilon(0.03));
  CHECK(std::abs(cross / n) < 0.05);
}

TEST_CASE("unit_phase has unit modulus") {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i)
    CHECK(std::abs(std::abs(rng.unit_phase()) - 1.0) < 1e-14);
  const CVec v = rng.unit_phase_vec(64);
  for (Eigen::Index i = 0; i < v.size(); ++i)
    CHECK(std::abs(std::abs(v[i]) - 1.0) < 1e-14);
}

TEST_CASE("below covers its range") {
  Rng rng(9);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = rng.below(7);
    REQUIRE(k < 7);
    ++hits[static_cast<int>(k)];
  }
  for (const int h : hits) CHECK(h > 700);
}

TEST_CASE("permutation is a permutation") {
  Rng rng(10);
  auto p = rng.permutation(257);
  auto q = p;
  std::sort(q.begin(), q.end());
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(q[i] == static_cast<int>(i));
  CHECK(p != q);  // 257! leaves identity vanishingly unlikely
}

TEST_CASE("matrix helpers are column-major draw order") {
  Rng a(11), b(11);
  const RMat m = a.normal_mat(3, 2);
  RMat ref(3, 2);
  for (Eigen::Index c = 0; c < 2; ++c)
    for (Eigen::Index r = 0; r < 3; ++r) ref(r, c) = b.normal();
  CHECK((m - ref).norm() == 0.0);
}
