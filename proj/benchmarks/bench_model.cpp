// Microbenchmarks for the hot numeric paths: convolution, the full
// forward/backward pair, and AdaDelta updates.

#include <benchmark/benchmark.h>

#include "mgnc/model.hpp"
#include "mgnc/training.hpp"

using namespace mgnc;

namespace {

Matrix<double> random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix<double> m(rows, cols);
  for (auto& x : m.data) x = rng.uniform(-1, 1);
  return m;
}

/// Full-scale single group model (d=300, heights {3,4,5}, 100 maps).
ModelParams<double> bench_model(std::size_t vocab, std::size_t dim) {
  Rng rng(1);
  EmbeddingGroup<double> g;
  g.name = "bench";
  g.dim = dim;
  g.table = Matrix<double>(vocab, dim);
  for (std::size_t r = 1; r < vocab; ++r)
    for (std::size_t c = 0; c < dim; ++c) g.table(r, c) = rng.uniform(-1, 1);
  std::vector<EmbeddingGroup<double>> groups;
  groups.push_back(std::move(g));
  return init_model<double>(std::move(groups), {3, 4, 5}, 100, 2,
                            Activation::relu, rng);
}

Batch bench_batch(std::size_t n, std::size_t s, std::size_t vocab, Rng& rng) {
  Batch b;
  b.size = n;
  b.s = s;
  for (std::size_t i = 0; i < n; ++i) {
    b.lengths.push_back(static_cast<int>(s));
    b.labels.push_back(static_cast<int>(rng.uniform_index(2)));
    for (std::size_t t = 0; t < s; ++t)
      b.idx.push_back(static_cast<int>(1 + rng.uniform_index(vocab - 1)));
  }
  return b;
}

}  // namespace

static void BM_Convolve(benchmark::State& state) {
  Rng rng(2);
  const auto A = random_matrix(static_cast<std::size_t>(state.range(0)), 300,
                               rng);
  const auto w = random_matrix(4, 300, rng);
  for (auto _ : state) {
    auto c = convolve(A, w, 0.1);
    benchmark::DoNotOptimize(c.data());
  }
}
BENCHMARK(BM_Convolve)->Arg(20)->Arg(60);

static void BM_ForwardBatch(benchmark::State& state) {
  const auto params = bench_model(5000, 300);
  Rng rng(3);
  const auto batch =
      bench_batch(static_cast<std::size_t>(state.range(0)), 30, 5000, rng);
  ForwardOptions<double> opt;
  opt.dropout_p = 0.5;
  opt.mode = Mode::test;
  for (auto _ : state) {
    auto traces = forward(params, batch, opt, nullptr);
    benchmark::DoNotOptimize(traces.data());
  }
}
BENCHMARK(BM_ForwardBatch)->Arg(1)->Arg(50);

static void BM_ForwardBackward(benchmark::State& state) {
  auto params = bench_model(5000, 300);
  Rng rng(4);
  const auto batch = bench_batch(50, 30, 5000, rng);
  ForwardOptions<double> opt;
  opt.dropout_p = 0.5;
  opt.mode = Mode::train;
  for (auto _ : state) {
    auto traces = forward(params, batch, opt, &rng);
    auto grads = zero_gradients(params);
    double loss = 0;
    for (std::size_t i = 0; i < traces.size(); ++i)
      loss += backward(traces[i], params, batch.labels[i],
                       1.0 / static_cast<double>(batch.size), grads);
    benchmark::DoNotOptimize(loss);
  }
}
BENCHMARK(BM_ForwardBackward);

static void BM_AdaDeltaStep(benchmark::State& state) {
  auto params = bench_model(5000, 300);
  auto grads = zero_gradients(params);
  Rng rng(5);
  for (auto& g : grads.cw.data) g = rng.uniform(-1e-3, 1e-3);
  for (auto& m : grads.emb)
    for (auto& g : m.data) g = rng.uniform(-1e-3, 1e-3);
  auto st = make_adadelta_state(params);
  for (auto _ : state) {
    adadelta_step(params, grads, st);
    benchmark::DoNotOptimize(params.classifier.w.data.data());
  }
}
BENCHMARK(BM_AdaDeltaStep);

BENCHMARK_MAIN();
