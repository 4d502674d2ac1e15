#pragma once

#include <cstdint>

#include "semeq/neural_eq.hpp"

namespace semeq {

// Inference cost of the complex-linear equalizer: a dense a x b complex
// matrix-vector product costs a(8b - 2) real FLOPs.
std::int64_t flops_linear(int n_theta, int n_gamma, int k_uses, int n_t, int n_r);

// Inference cost of the neural equalizer at sparsity s: pruned dense layers
// cost 8(1-s) * (weight count), plus 2 * gelu_cost * hidden for the two
// magnitude-GELU activations.
std::int64_t flops_neural(int n_theta, int n_gamma, int k_uses, int n_t, int n_r,
                          double sparsity, int gelu_cost = 100);

// Same count from the actual masks (integer-exact for any mask pattern).
std::int64_t flops_neural_exact(const NeuralEqualizer& eq, int gelu_cost = 100);

}  // namespace semeq
