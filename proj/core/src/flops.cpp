#include "semeq/flops.hpp"

#include <cmath>

namespace semeq {

namespace {
std::int64_t half(int n) { return (n + 1) / 2; }
}

std::int64_t flops_linear(int n_theta, int n_gamma, int k_uses, int n_t, int n_r) {
  const std::int64_t tx = static_cast<std::int64_t>(k_uses) * n_t;
  const std::int64_t rx = static_cast<std::int64_t>(k_uses) * n_r;
  return tx * (8 * half(n_theta) - 2) + half(n_gamma) * (8 * rx - 2);
}

std::int64_t flops_neural(int n_theta, int n_gamma, int k_uses, int n_t, int n_r,
                          double sparsity, int gelu_cost) {
  const std::int64_t h = half(n_gamma);
  const std::int64_t tx = static_cast<std::int64_t>(k_uses) * n_t;
  const std::int64_t rx = static_cast<std::int64_t>(k_uses) * n_r;
  const std::int64_t weights = half(n_theta) * h + h * tx + rx * h + h * h;
  return std::llround(8.0 * (1.0 - sparsity) * static_cast<double>(weights)) +
         2 * static_cast<std::int64_t>(gelu_cost) * h;
}

std::int64_t flops_neural_exact(const NeuralEqualizer& eq, int gelu_cost) {
  return 8 * active_weights(eq) +
         2 * static_cast<std::int64_t>(gelu_cost) * eq.g2.W.rows();
}

}  // namespace semeq
