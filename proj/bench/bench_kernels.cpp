#include <benchmark/benchmark.h>

#include <vector>

#include "m3hl/kernels.hpp"
#include "m3hl/rng.hpp"

namespace k = m3hl::kernels;

namespace {

struct Buffers {
  k::ConvDims d;
  std::vector<double> in, w, bias, out, dy, din, dw, db;

  explicit Buffers(const benchmark::State& state) {
    d = {static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)),
         static_cast<std::size_t>(state.range(1)), static_cast<std::size_t>(state.range(2)),
         static_cast<std::size_t>(state.range(2)), 3};
    m3hl::SplitMix64 rng(1);
    const auto fill = [&](std::vector<double>& v, std::size_t n) {
      v.resize(n);
      for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    };
    fill(in, d.input_size());
    fill(w, d.weight_size());
    fill(bias, d.cout);
    fill(dy, d.output_size());
    out.assign(d.output_size(), 0.0);
    din.assign(d.input_size(), 0.0);
    dw.assign(d.weight_size(), 0.0);
    db.assign(d.cout, 0.0);
  }

  double flops() const { return 2.0 * static_cast<double>(d.output_size() * d.cin * d.k * d.k); }
};

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  Buffers b(state);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::conv2d_forward(b.in, b.w, b.bias, b.out, b.d);
    } else {
      k::serial::conv2d_forward(b.in, b.w, b.bias, b.out, b.d);
    }
    benchmark::DoNotOptimize(b.out.data());
  }
  state.counters["GFLOP/s"] = benchmark::Counter(b.flops() * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
  Buffers b(state);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::conv2d_backward_input(b.dy, b.w, b.din, b.d);
      k::conv2d_backward_weight(b.dy, b.in, b.dw, b.db, b.d);
    } else {
      k::serial::conv2d_backward_input(b.dy, b.w, b.din, b.d);
      k::serial::conv2d_backward_weight(b.dy, b.in, b.dw, b.db, b.d);
    }
    benchmark::DoNotOptimize(b.din.data());
    benchmark::DoNotOptimize(b.dw.data());
  }
  state.counters["GFLOP/s"] =
      benchmark::Counter(2.0 * b.flops() * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
}

// Args: batch, channels (in = out), spatial size.
void Shapes(benchmark::internal::Benchmark* b) {
  b->Args({8, 8, 32})->Args({8, 16, 64})->Args({8, 64, 16})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/serial")->Apply(Shapes);
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/parallel")->Apply(Shapes);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/serial")->Apply(Shapes);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/parallel")->Apply(Shapes);

BENCHMARK_MAIN();
