#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semeq/errors.hpp"
#include "semeq/linalg.hpp"

namespace semeq {

// Paired semantic pilots: one column per sample. Z_* are the complex-packed
// views of S_* (real halves on top, imaginary below; odd dims zero-padded).
struct PilotSet {
  RMat S_theta;  // N_theta x N
  RMat S_gamma;  // N_gamma x N
  CMat Z_theta;  // (N_theta/2) x N
  CMat Z_gamma;  // (N_gamma/2) x N
  std::vector<std::uint32_t> labels;  // optional class ids, empty if absent
  bool pad_theta = false;  // source dim was odd and got a zero row appended
  bool pad_gamma = false;
  int n() const { return static_cast<int>(S_theta.cols()); }
};

enum class MismatchKind { Linear, Nonlinear };

// Desk-scale stand-in for a pair of independently trained encoders looking at
// the same Gaussian-mixture concepts.
struct SyntheticTaskSpec {
  int concept_dim = 16;
  int n_classes = 10;
  int n_theta = 64;
  int n_gamma = 32;
  MismatchKind mismatch = MismatchKind::Linear;
  double class_separation = 6.0;
  double latent_noise = 0.1;
  double within_var = 1.0;    // within-class variance on the class-mean dims
  double nuisance_var = 1.0;  // variance on the style (class-free) dims
  int n_total = 4400;
  int n_train = 2400;  // training pool; validation is drawn from inside it
  int n_val = 400;
  std::uint64_t seed = 0;
};

struct PilotSplits {
  PilotSet train;  // n_train - n_val effective samples
  PilotSet val;
  PilotSet test;   // remainder
};

// All n_total samples in generation order (deterministic per seed).
PilotSet generate_synthetic_full(const SyntheticTaskSpec& spec);

// Contiguous deterministic split of the synthetic stream: the first n_train
// samples form the training pool whose last n_val become validation; the
// rest is test.
PilotSplits generate_synthetic(const SyntheticTaskSpec& spec);

// Seeded shuffled split with the same n_val-from-within-n_train convention
// (for externally loaded pilots whose order may be meaningful).
PilotSplits split(const PilotSet& pilots, int n_train, int n_val, std::uint64_t seed);

// Binary pilot container: magic "SEMPILOT", u32 LE version=1, u64 LE N,
// u64 LE dim, then dim*N float64 LE column-major. Labels: magic "SEMLABEL",
// u32 LE version=1, u64 LE N, then N u32 LE class ids.
void save_pilots(const PilotSet& pilots, const std::string& path_theta,
                 const std::string& path_gamma,
                 const std::optional<std::string>& path_labels = std::nullopt);
PilotSet load_pilots(const std::string& path_theta, const std::string& path_gamma,
                     const std::optional<std::string>& path_labels = std::nullopt);

// Per-class means of target-train latents; classifier assigns the nearest
// centroid (ties go to the lowest class id).
RMat class_centroids(const RMat& S, const std::vector<std::uint32_t>& labels, int n_classes);
double centroid_accuracy(const RMat& S_hat, const std::vector<std::uint32_t>& labels,
                         const RMat& centroids);

}  // namespace semeq
