#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <set>

#include "semeq/errors.hpp"
#include "semeq/pilots.hpp"

using namespace semeq;

namespace {

SyntheticTaskSpec small_spec(std::uint64_t seed, MismatchKind kind) {
  SyntheticTaskSpec spec;
  spec.n_total = 600;
  spec.n_train = 300;
  spec.n_val = 60;
  spec.mismatch = kind;
  spec.seed = seed;
  return spec;
}

std::string tmp_path(const char* stem) {
  return std::string("/tmp/semeq_test_") + stem;
}

}  // namespace

TEST_CASE("synthetic generation: shape, determinism, labels") {
  const SyntheticTaskSpec spec = small_spec(5, MismatchKind::Linear);
  const PilotSet a = generate_synthetic_full(spec);
  const PilotSet b = generate_synthetic_full(spec);
  REQUIRE(a.S_theta.rows() == 64);
  REQUIRE(a.S_gamma.rows() == 32);
  REQUIRE(a.n() == 600);
  REQUIRE(a.labels.size() == 600);
  CHECK((a.S_theta - b.S_theta).norm() == 0.0);
  CHECK((a.S_gamma - b.S_gamma).norm() == 0.0);
  CHECK(a.labels == b.labels);
  for (const auto l : a.labels) CHECK(l < 10);

  SyntheticTaskSpec other = spec;
  other.seed = 6;
  const PilotSet c = generate_synthetic_full(other);
  CHECK((a.S_theta - c.S_theta).norm() > 1.0);
}

TEST_CASE("nonlinear mismatch changes only the source side") {
  SyntheticTaskSpec lin = small_spec(7, MismatchKind::Linear);
  SyntheticTaskSpec non = small_spec(7, MismatchKind::Nonlinear);
  const PilotSet a = generate_synthetic_full(lin);
  const PilotSet b = generate_synthetic_full(non);
  CHECK((a.S_gamma - b.S_gamma).norm() == 0.0);
  CHECK((a.S_theta - b.S_theta).norm() > 1.0);
}

TEST_CASE("generate_synthetic splits contiguously") {
  const SyntheticTaskSpec spec = small_spec(8, MismatchKind::Linear);
  const PilotSet full = generate_synthetic_full(spec);
  const PilotSplits sp = generate_synthetic(spec);
  REQUIRE(sp.train.n() == 240);
  REQUIRE(sp.val.n() == 60);
  REQUIRE(sp.test.n() == 300);
  CHECK((sp.train.S_theta - full.S_theta.leftCols(240)).norm() == 0.0);
  CHECK((sp.val.S_gamma - full.S_gamma.middleCols(240, 60)).norm() == 0.0);
  CHECK((sp.test.S_theta - full.S_theta.rightCols(300)).norm() == 0.0);
  CHECK(sp.test.labels[0] == full.labels[300]);
}

TEST_CASE("shuffled split partitions exactly") {
  // columns tagged by index so the partition can be reconstructed
  PilotSet tagged;
  const int n = 50;
  tagged.S_theta = RMat::Zero(2, n);
  tagged.S_gamma = RMat::Zero(2, n);
  for (int j = 0; j < n; ++j) {
    tagged.S_theta(0, j) = j;
    tagged.S_gamma(0, j) = j;
    tagged.labels.push_back(static_cast<std::uint32_t>(j % 3));
  }
  const PilotSplits sp = split(tagged, 30, 10, 123);
  REQUIRE(sp.train.n() == 20);
  REQUIRE(sp.val.n() == 10);
  REQUIRE(sp.test.n() == 20);
  std::set<int> seen;
  auto collect = [&seen](const PilotSet& part) {
    for (int j = 0; j < part.n(); ++j) {
      const int tag = static_cast<int>(part.S_theta(0, j));
      CHECK(part.S_gamma(0, j) == tag);  // theta/gamma stay paired
      CHECK(part.labels[static_cast<std::size_t>(j)] == static_cast<std::uint32_t>(tag % 3));
      seen.insert(tag);
    }
  };
  collect(sp.train);
  collect(sp.val);
  collect(sp.test);
  CHECK(seen.size() == static_cast<std::size_t>(n));

  const PilotSplits sp2 = split(tagged, 30, 10, 123);
  CHECK((sp2.train.S_theta - sp.train.S_theta).norm() == 0.0);
  const PilotSplits sp3 = split(tagged, 30, 10, 124);
  CHECK((sp3.train.S_theta - sp.train.S_theta).norm() > 0.0);
}

TEST_CASE("pilot files round-trip bitwise") {
  const SyntheticTaskSpec spec = small_spec(9, MismatchKind::Nonlinear);
  const PilotSet a = generate_synthetic_full(spec);
  const std::string t = tmp_path("pilots.theta.bin");
  const std::string g = tmp_path("pilots.gamma.bin");
  const std::string l = tmp_path("pilots.labels.bin");
  save_pilots(a, t, g, l);
  const PilotSet b = load_pilots(t, g, l);
  CHECK((a.S_theta.array() == b.S_theta.array()).all());
  CHECK((a.S_gamma.array() == b.S_gamma.array()).all());
  CHECK(a.labels == b.labels);

  const PilotSet c = load_pilots(t, g);  // labels optional
  CHECK(c.labels.empty());

  std::remove(t.c_str());
  std::remove(g.c_str());
  std::remove(l.c_str());
}

TEST_CASE("pilot loader rejects corrupted files") {
  CHECK_THROWS_AS(load_pilots("/tmp/semeq_no_such.bin", "/tmp/semeq_no_such2.bin"),
                  IoError);
  const std::string p = tmp_path("garbage.bin");
  {
    FILE* f = fopen(p.c_str(), "wb");
    fwrite("NOTMAGIC________", 1, 16, f);
    fclose(f);
  }
  CHECK_THROWS_AS(load_pilots(p, p), IoError);
  std::remove(p.c_str());
}

TEST_CASE("centroid classifier and its tie rule") {
  RMat S(1, 4);
  S << 0.0, 0.0, 4.0, 4.0;
  std::vector<std::uint32_t> labels{0, 0, 1, 1};
  const RMat cen = class_centroids(S, labels, 2);
  CHECK(cen(0, 0) == 0.0);
  CHECK(cen(0, 1) == 4.0);

  RMat probe(1, 3);
  probe << 1.0, 3.0, 2.0;  // last sits exactly between both centroids
  std::vector<std::uint32_t> want{0, 1, 0};  // tie resolves to the lowest id
  CHECK(centroid_accuracy(probe, want, cen) == doctest::Approx(1.0));

  std::vector<std::uint32_t> bad{0, 0, 7};
  CHECK_THROWS_AS(class_centroids(S, bad, 2), std::invalid_argument);
}

TEST_CASE("empty classes never win the argmin") {
  RMat S(1, 2);
  S << 1.0, 3.0;
  std::vector<std::uint32_t> labels{2, 2};  // classes 0 and 1 unseen
  const RMat cen = class_centroids(S, labels, 3);
  RMat probe(1, 1);
  probe << 2.0;
  std::vector<std::uint32_t> want{2};
  CHECK(centroid_accuracy(probe, want, cen) == doctest::Approx(1.0));
}

TEST_CASE("generation validates spec fields") {
  SyntheticTaskSpec spec = small_spec(1, MismatchKind::Linear);
  spec.concept_dim = 3;  // must be even
  CHECK_THROWS_AS(generate_synthetic_full(spec), std::invalid_argument);
  spec = small_spec(1, MismatchKind::Linear);
  spec.n_theta = 10;  // must be >= concept_dim
  CHECK_THROWS_AS(generate_synthetic_full(spec), std::invalid_argument);
  spec = small_spec(1, MismatchKind::Linear);
  spec.n_train = 700;  // exceeds n_total
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
}
