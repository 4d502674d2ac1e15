#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semeq/channel.hpp"
#include "semeq/linear_eq.hpp"
#include "semeq/neural_eq.hpp"
#include "semeq/pilots.hpp"

namespace semeq {

enum class Method { Linear, Neural, FirstK, TopK, EigenK };

std::string method_name(Method m);
Method method_from_name(const std::string& name);  // throws ConfigError

struct TaskConfig {
  bool synthetic = true;
  SyntheticTaskSpec spec;
  std::string theta_path, gamma_path, labels_path;  // files mode
};

struct AdaptConfig {
  double design_alpha_d = 10.0;
  double blocked_alpha_d = 1e6;
  int n_steps = 10;
  double step = 0.1;  // neural phase-PGD step (linear uses 1/lambda_max)
};

// Empty axis = sweep the single value already in channel/task/train.
struct SweepAxes {
  std::vector<int> k_uses, n_t, n_phi, n_train;
  std::vector<double> snr_db, beta;
};

struct ExperimentConfig {
  TaskConfig task;
  ChannelParams channel;
  Method method = Method::Linear;
  AdmmConfig admm;
  TrainConfig train;
  int phy_iters = 30;  // physical-equalizer alternation rounds
  SweepAxes sweep;
  int n_seeds = 5;
  int n_noise_draws = 10;
  AdaptConfig adapt;
};

// Loads TOML (subset: sections, dotted keys, scalars, single-line arrays) or
// JSON by extension, then applies dotted-path `key=value` overrides. Unknown
// keys and type mismatches raise ConfigError with the offending key path.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::pair<std::string, std::string>>&
                                 overrides = {});

// Same, from memory (tests; `toml` selects the parser).
ExperimentConfig parse_config_text(const std::string& text, bool toml,
                                   const std::vector<std::pair<std::string, std::string>>&
                                       overrides = {});

}  // namespace semeq
