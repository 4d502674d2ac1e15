#include "semeq/pilots.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "binio.hpp"
#include "semeq/rng.hpp"

namespace semeq {

namespace {

// Orthonormal-column complex matrix (reduced QR of a Gaussian draw).
CMat random_orthonormal(Rng& rng, int rows, int cols) {
  CMat A(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) A(i, j) = cplx(rng.normal(), rng.normal());
  Eigen::HouseholderQR<CMat> qr(A);
  return qr.householderQ() * CMat::Identity(rows, cols);
}

// z * tanh(|z|) / |z| elementwise: saturates magnitudes, keeps phases.
CMat mag_tanh(const CMat& Z) {
  CMat out(Z.rows(), Z.cols());
  for (Eigen::Index j = 0; j < Z.cols(); ++j)
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      const double m = std::abs(Z(i, j));
      out(i, j) = Z(i, j) * (std::tanh(m) / std::max(m, 1e-300));
    }
  return out;
}

PilotSet take_contiguous(const PilotSet& src, int begin, int count) {
  PilotSet out;
  out.S_theta = src.S_theta.middleCols(begin, count);
  out.S_gamma = src.S_gamma.middleCols(begin, count);
  out.Z_theta = src.Z_theta.middleCols(begin, count);
  out.Z_gamma = src.Z_gamma.middleCols(begin, count);
  if (!src.labels.empty())
    out.labels.assign(src.labels.begin() + begin, src.labels.begin() + begin + count);
  out.pad_theta = src.pad_theta;
  out.pad_gamma = src.pad_gamma;
  return out;
}

PilotSet take_indexed(const PilotSet& src, const std::vector<int>& idx, int begin,
                      int count) {
  PilotSet out;
  out.S_theta.resize(src.S_theta.rows(), count);
  out.S_gamma.resize(src.S_gamma.rows(), count);
  out.Z_theta.resize(src.Z_theta.rows(), count);
  out.Z_gamma.resize(src.Z_gamma.rows(), count);
  if (!src.labels.empty()) out.labels.resize(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    const int s = idx[static_cast<std::size_t>(begin + j)];
    out.S_theta.col(j) = src.S_theta.col(s);
    out.S_gamma.col(j) = src.S_gamma.col(s);
    out.Z_theta.col(j) = src.Z_theta.col(s);
    out.Z_gamma.col(j) = src.Z_gamma.col(s);
    if (!src.labels.empty()) out.labels[static_cast<std::size_t>(j)] = src.labels[static_cast<std::size_t>(s)];
  }
  out.pad_theta = src.pad_theta;
  out.pad_gamma = src.pad_gamma;
  return out;
}

void check_split_sizes(int n, int n_train, int n_val) {
  if (n_train < 1 || n_train > n)
    throw std::invalid_argument("split: n_train out of range");
  if (n_val < 0 || n_val >= n_train)
    throw std::invalid_argument("split: n_val must be in [0, n_train)");
  if (n_train == n)
    std::fprintf(stderr, "semeq: warning: split leaves an empty test set\n");
}

void save_real_matrix(const std::string& path, const RMat& S) {
  binio::Writer w(path);
  w.magic("SEMPILOT");
  w.u32(1);
  w.u64(static_cast<std::uint64_t>(S.cols()));
  w.u64(static_cast<std::uint64_t>(S.rows()));
  w.f64_array(S.data(), static_cast<std::size_t>(S.size()));
}

RMat load_real_matrix(const std::string& path) {
  binio::Reader r(path);
  r.expect_magic("SEMPILOT");
  r.expect_version(1);
  const std::uint64_t n = r.u64();
  const std::uint64_t dim = r.u64();
  if (dim == 0 || n == 0) throw IoError(path, "empty pilot matrix");
  if (dim > (1u << 20) || n > (1u << 28)) throw IoError(path, "implausible dimensions");
  RMat S(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n));
  r.f64_array(S.data(), static_cast<std::size_t>(S.size()));
  return S;
}

}  // namespace

PilotSet generate_synthetic_full(const SyntheticTaskSpec& spec) {
  if (spec.concept_dim < 2 || spec.concept_dim % 2 != 0)
    throw std::invalid_argument("synthetic: concept_dim must be even and >= 2");
  if (spec.n_theta % 2 != 0 || spec.n_gamma % 2 != 0)
    throw std::invalid_argument("synthetic: latent dims must be even");
  if (spec.n_theta < spec.concept_dim || spec.n_gamma < spec.concept_dim)
    throw std::invalid_argument("synthetic: latent dims must be >= concept_dim");
  if (spec.n_classes < 1) throw std::invalid_argument("synthetic: n_classes must be >= 1");
  if (spec.n_total < 1) throw std::invalid_argument("synthetic: n_total must be >= 1");

  const int dc = spec.concept_dim / 2;
  const int n = spec.n_total;
  const int n_pairs = (spec.n_classes + 1) / 2;
  const int dcls = std::min(n_pairs, dc);
  Rng rng(spec.seed);

  // Class means live on the first dcls complex dims: a DFT-like grid of
  // phases shared by class pairs, with the odd class of each pair rotated
  // by i so paired classes stay equidistant.
  const double amp = spec.class_separation / std::sqrt(2.0 * dcls);
  CMat means = CMat::Zero(dc, spec.n_classes);
  for (int c = 0; c < spec.n_classes; ++c) {
    const int pair = c / 2;
    for (int k = 0; k < dcls; ++k) {
      const double ang = 2.0 * std::numbers::pi * pair * k / dcls;
      cplx v = amp * std::exp(cplx(0.0, ang));
      if (c % 2 == 1) v *= cplx(0.0, 1.0);
      means(k, c) = v;
    }
  }

  RVec prof = RVec::Constant(dc, std::sqrt(spec.nuisance_var));
  prof.head(dcls).setConstant(std::sqrt(spec.within_var));

  std::vector<std::uint32_t> labels(static_cast<std::size_t>(n));
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng.below(spec.n_classes));

  CMat U(dc, n);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < dc; ++i)
      U(i, j) = prof(i) * cplx(rng.normal(), rng.normal()) * inv_sqrt2;
    U.col(j) += means.col(static_cast<int>(labels[static_cast<std::size_t>(j)]));
  }

  const CMat Qt = random_orthonormal(rng, spec.n_theta / 2, dc);
  const CMat Qg = random_orthonormal(rng, spec.n_gamma / 2, dc);

  CMat psi_t;
  if (spec.mismatch == MismatchKind::Nonlinear) {
    // theta-side only: gamma keeps the clean linear view of the concepts.
    // Mixing uses its own stream so the gamma side stays bitwise identical
    // to the linear-mismatch task at the same seed.
    Rng mrng(mix_seed(spec.seed, 0x7a11));
    CMat Mt(dc, dc);
    const double mscale = 1.0 / std::sqrt(2.0 * dc);
    for (int j = 0; j < dc; ++j)
      for (int i = 0; i < dc; ++i)
        Mt(i, j) = cplx(mrng.normal(), mrng.normal()) * mscale;
    psi_t = mag_tanh(Mt * U);
  } else {
    psi_t = U;
  }

  PilotSet out;
  out.Z_theta = Qt * psi_t;
  const double s = spec.latent_noise;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < spec.n_theta / 2; ++i)
      out.Z_theta(i, j) += s * cplx(rng.normal(), rng.normal());
  out.Z_gamma = Qg * U;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < spec.n_gamma / 2; ++i)
      out.Z_gamma(i, j) += s * cplx(rng.normal(), rng.normal());

  out.S_theta = complex_to_real_cols(out.Z_theta);
  out.S_gamma = complex_to_real_cols(out.Z_gamma);
  out.labels = std::move(labels);
  return out;
}

PilotSplits generate_synthetic(const SyntheticTaskSpec& spec) {
  check_split_sizes(spec.n_total, spec.n_train, spec.n_val);
  const PilotSet full = generate_synthetic_full(spec);
  PilotSplits sp;
  sp.train = take_contiguous(full, 0, spec.n_train - spec.n_val);
  sp.val = take_contiguous(full, spec.n_train - spec.n_val, spec.n_val);
  sp.test = take_contiguous(full, spec.n_train, spec.n_total - spec.n_train);
  return sp;
}

PilotSplits split(const PilotSet& pilots, int n_train, int n_val, std::uint64_t seed) {
  const int n = pilots.n();
  check_split_sizes(n, n_train, n_val);
  Rng rng(mix_seed(seed, 0x5911d));
  const std::vector<int> perm = rng.permutation(n);
  PilotSplits sp;
  sp.train = take_indexed(pilots, perm, 0, n_train - n_val);
  sp.val = take_indexed(pilots, perm, n_train - n_val, n_val);
  sp.test = take_indexed(pilots, perm, n_train, n - n_train);
  return sp;
}

void save_pilots(const PilotSet& pilots, const std::string& path_theta,
                 const std::string& path_gamma,
                 const std::optional<std::string>& path_labels) {
  save_real_matrix(path_theta, pilots.S_theta);
  save_real_matrix(path_gamma, pilots.S_gamma);
  if (path_labels) {
    if (pilots.labels.size() != static_cast<std::size_t>(pilots.n()))
      throw IoError(*path_labels, "pilot set has no labels to save");
    binio::Writer w(*path_labels);
    w.magic("SEMLABEL");
    w.u32(1);
    w.u64(static_cast<std::uint64_t>(pilots.labels.size()));
    for (const auto l : pilots.labels) w.u32(l);
  }
}

PilotSet load_pilots(const std::string& path_theta, const std::string& path_gamma,
                     const std::optional<std::string>& path_labels) {
  PilotSet out;
  out.S_theta = load_real_matrix(path_theta);
  out.S_gamma = load_real_matrix(path_gamma);
  if (out.S_gamma.cols() != out.S_theta.cols())
    throw IoError(path_gamma, "sample count differs from the theta pilots");
  out.pad_theta = out.S_theta.rows() % 2 != 0;
  out.pad_gamma = out.S_gamma.rows() % 2 != 0;
  out.Z_theta = real_to_complex_cols(out.S_theta);
  out.Z_gamma = real_to_complex_cols(out.S_gamma);
  if (path_labels) {
    binio::Reader r(*path_labels);
    r.expect_magic("SEMLABEL");
    r.expect_version(1);
    const std::uint64_t nl = r.u64();
    if (nl != static_cast<std::uint64_t>(out.n()))
      throw IoError(*path_labels, "label count differs from the pilots");
    out.labels.resize(static_cast<std::size_t>(nl));
    for (auto& l : out.labels) l = r.u32();
  }
  return out;
}

RMat class_centroids(const RMat& S, const std::vector<std::uint32_t>& labels,
                     int n_classes) {
  if (labels.size() != static_cast<std::size_t>(S.cols()))
    throw std::invalid_argument("class_centroids: label count mismatch");
  RMat C = RMat::Zero(S.rows(), n_classes);
  std::vector<int> count(static_cast<std::size_t>(n_classes), 0);
  for (Eigen::Index j = 0; j < S.cols(); ++j) {
    const auto c = labels[static_cast<std::size_t>(j)];
    if (c >= static_cast<std::uint32_t>(n_classes))
      throw std::invalid_argument("class_centroids: label out of range");
    C.col(static_cast<Eigen::Index>(c)) += S.col(j);
    ++count[c];
  }
  for (int c = 0; c < n_classes; ++c) {
    if (count[static_cast<std::size_t>(c)] > 0)
      C.col(c) /= count[static_cast<std::size_t>(c)];
    else
      C.col(c).setConstant(std::numeric_limits<double>::infinity());
  }
  return C;
}

double centroid_accuracy(const RMat& S_hat, const std::vector<std::uint32_t>& labels,
                         const RMat& centroids) {
  if (labels.size() != static_cast<std::size_t>(S_hat.cols()))
    throw std::invalid_argument("centroid_accuracy: label count mismatch");
  if (S_hat.cols() == 0) return 0.0;
  int hits = 0;
  for (Eigen::Index j = 0; j < S_hat.cols(); ++j) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.cols(); ++c) {
      const double d = (S_hat.col(j) - centroids.col(c)).squaredNorm();
      if (d < best_d) {  // strict: ties keep the lowest class id
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    if (best == static_cast<int>(labels[static_cast<std::size_t>(j)])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(S_hat.cols());
}

}  // namespace semeq
