#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "semeq/baselines.hpp"
#include "semeq/config.hpp"
#include "semeq/flops.hpp"

namespace semeq {

// One experiment outcome. Column order of the v1 CSV schema; NaN metrics are
// emitted as empty cells.
struct ResultRow {
  std::string method;    // fit method, with _pre/_blocked/_adapted suffixes in adapt runs
  std::string task;      // "synthetic" | "files"
  std::string mismatch;  // "linear" | "nonlinear" | "" (files)
  int k_uses = 1;
  int n_t = 1;
  int n_r = 1;
  int n_phi = 0;
  double snr_db = 0.0;
  int n_train = 0;
  double beta = 0.0;
  double zeta = 0.0;
  std::uint64_t seed = 0;
  double mse = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  std::int64_t flops = 0;
  double sparsity = std::numeric_limits<double>::quiet_NaN();
  double power_dev = std::numeric_limits<double>::quiet_NaN();
  double phi_dev = std::numeric_limits<double>::quiet_NaN();
  double wall_time = 0.0;
  std::string error;  // empty on success; commas/newlines sanitized
  std::vector<double> objective_history;
};

std::string csv_header();
std::string csv_line(const ResultRow& row);

struct EvalResult {
  double mse = 0.0;
  double accuracy = -1.0;  // negative when labels were unavailable
};

// Monte-Carlo test evaluation: encode, K channel uses with the given phases,
// fresh noise per draw, decode, mean squared error (plus centroid accuracy
// when centroids+labels are given).
EvalResult evaluate_linear(const LinearEqualizer& eq, const RMat& S_theta,
                           const RMat& S_gamma, const ChannelRealization& chan,
                           const CVec& phi, int n_draws, std::uint64_t noise_seed,
                           const RMat* centroids = nullptr,
                           const std::vector<std::uint32_t>* labels = nullptr);
EvalResult evaluate_neural(const NeuralEqualizer& eq, const RMat& S_theta,
                           const RMat& S_gamma, const ChannelRealization& chan,
                           const CVec& phi, int n_draws, std::uint64_t noise_seed,
                           const RMat* centroids = nullptr,
                           const std::vector<std::uint32_t>* labels = nullptr);

// Accuracy of the raw matched target latents ("Matched Target Encoder"
// reference): upper bound for any equalizer on the same split.
double matched_target_accuracy(const PilotSplits& splits, int n_classes);

// Cross-product sweep with crash-safe resume: rows append to `out_path`
// (header written once), completed (point, seed) keys are skipped, and
// `<out_path>.agg.csv` is rewritten with per-point mean/min/max aggregates.
// With emit_json, a JSON mirror of all rows lands next to the CSV.
void run_sweep(const ExperimentConfig& cfg, const std::string& out_path,
               bool emit_json = false);

// RIS-only channel adaptation (design at adapt.design_alpha_d without RIS,
// re-block the direct path, then PGD on phi alone): three rows per swept
// n_phi and seed, method-suffixed _pre/_blocked/_adapted.
std::vector<ResultRow> run_adaptation(const ExperimentConfig& cfg);

void write_rows_csv(const std::vector<ResultRow>& rows, const std::string& out_path);
void write_rows_json(const std::vector<ResultRow>& rows, const std::string& out_path);

int cli_main(int argc, char** argv);

}  // namespace semeq
