#include <benchmark/benchmark.h>

#include "semeq/channel.hpp"
#include "semeq/linalg.hpp"
#include "semeq/linear_eq.hpp"
#include "semeq/neural_eq.hpp"
#include "semeq/pilots.hpp"
#include "semeq/rng.hpp"

using namespace semeq;

namespace {

CMat hermitian_pd(Rng& rng, int n, double shift) {
  const CMat X = rng.cnormal_mat(n, n);
  return X * X.adjoint() / n + shift * CMat::Identity(n, n);
}

void BM_SolveSylvester(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  const CMat A = hermitian_pd(rng, n, 0.0);
  const CMat B = hermitian_pd(rng, 2 * n, 0.5);
  const CMat C = rng.cnormal_mat(n, 2 * n);
  for (auto _ : state) benchmark::DoNotOptimize(solve_sylvester(A, B, C));
}
BENCHMARK(BM_SolveSylvester)->Arg(16)->Arg(32)->Arg(64);

void BM_Svd(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(2);
  const CMat A = rng.cnormal_mat(n, 2 * n);
  for (auto _ : state) benchmark::DoNotOptimize(svd(A));
}
BENCHMARK(BM_Svd)->Arg(32)->Arg(64);

void BM_ApplyEffective(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  ChannelParams p;
  p.n_t = 8;
  p.n_r = 8;
  p.n_phi = 16;
  p.k_uses = K;
  const ChannelRealization chan = sample_channel(p, 3);
  Rng rng(4);
  const CVec phi = rng.unit_phase_vec(16);
  const CMat block = ris_block(chan, phi);
  const CMat X = rng.cnormal_mat(K * 8, 2000);
  for (auto _ : state) benchmark::DoNotOptimize(apply_effective(block, K, X));
}
BENCHMARK(BM_ApplyEffective)->Arg(1)->Arg(4);

void BM_FitLinear(benchmark::State& state) {
  SyntheticTaskSpec spec;
  spec.concept_dim = 8;
  spec.n_classes = 5;
  spec.n_theta = 32;
  spec.n_gamma = 16;
  spec.n_total = 700;
  spec.n_train = 500;
  spec.n_val = 100;
  const PilotSplits sp = generate_synthetic(spec);
  ChannelParams p;
  p.n_t = 4;
  p.n_r = 4;
  p.n_phi = 8;
  p.k_uses = static_cast<int>(state.range(0));
  const ChannelRealization chan = sample_channel(p, 5);
  AdmmConfig cfg;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        fit_linear(sp.train.S_theta, sp.train.S_gamma, chan, cfg));
}
BENCHMARK(BM_FitLinear)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_NeuralLossAndGrads(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  ChannelParams p;
  p.n_t = 8;
  p.n_r = 8;
  p.n_phi = 16;
  p.k_uses = 4;
  const ChannelRealization chan = sample_channel(p, 6);
  Rng rng(7);
  NeuralEqualizer eq;
  auto layer = [&rng](int rows, int cols) {
    ComplexDense l;
    l.W = rng.cnormal_mat(rows, cols, 1.0 / (rows + cols));
    l.b = CVec::Zero(rows);
    l.mask = RMat::Ones(rows, cols);
    return l;
  };
  eq.f1 = layer(16, 32);
  eq.f2 = layer(32, 16);
  eq.g1 = layer(16, 32);
  eq.g2 = layer(16, 16);
  eq.phi_raw = rng.unit_phase_vec(16);
  eq.n_theta = 64;
  eq.n_gamma = 32;
  eq.k_uses = 4;
  eq.n_t = 8;
  eq.n_r = 8;
  eq.weq = RMat::Identity(64, 64);
  eq.mu_theta = RVec::Zero(64);
  const CMat Zin = rng.cnormal_mat(32, batch);
  const CMat Ztgt = rng.cnormal_mat(16, batch);
  const CMat noise = rng.cnormal_mat(32, batch, 0.025);
  NeuralGradients g;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        neural_loss_and_grads(eq, Zin, Ztgt, chan, noise, nullptr, &g));
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_NeuralLossAndGrads)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
