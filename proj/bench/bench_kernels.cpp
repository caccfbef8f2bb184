// Copyright 2026 The sedkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference vs OpenMP kernels on training-shaped workloads.
// Run: ./bench_kernels [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include <vector>

#include "sedkit/kernels.hpp"
#include "sedkit/rng.hpp"

using namespace sedkit;

namespace {

std::vector<float> random_vec(int64_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

// Desk-profile conv shape: batch 8, 16->16 channels, 128 frames, 40 bands.
constexpr int B = 8, Cin = 16, Cout = 16, H = 128, W = 40, K = 5, PAD = 2;

void bm_conv2d_serial(benchmark::State& state) {
  const auto x = random_vec(static_cast<int64_t>(B) * Cin * H * W, 1);
  const auto w = random_vec(static_cast<int64_t>(Cout) * Cin * K * K, 2);
  const auto bias = random_vec(Cout, 3);
  std::vector<float> y(static_cast<int64_t>(B) * Cout * H * W);
  for (auto _ : state) {
    kernels::conv2d_forward_serial(x.data(), w.data(), bias.data(), y.data(), B, Cin, H,
                                   W, Cout, K, PAD);
    benchmark::DoNotOptimize(y.data());
  }
}

void bm_conv2d_omp(benchmark::State& state) {
  const auto x = random_vec(static_cast<int64_t>(B) * Cin * H * W, 1);
  const auto w = random_vec(static_cast<int64_t>(Cout) * Cin * K * K, 2);
  const auto bias = random_vec(Cout, 3);
  std::vector<float> y(static_cast<int64_t>(B) * Cout * H * W);
  for (auto _ : state) {
    kernels::conv2d_forward_omp(x.data(), w.data(), bias.data(), y.data(), B, Cin, H, W,
                                Cout, K, PAD);
    benchmark::DoNotOptimize(y.data());
  }
}

void bm_conv2d_backward_filter_serial(benchmark::State& state) {
  const auto gy = random_vec(static_cast<int64_t>(B) * Cout * H * W, 4);
  const auto x = random_vec(static_cast<int64_t>(B) * Cin * H * W, 5);
  std::vector<float> gw(static_cast<int64_t>(Cout) * Cin * K * K), gb(Cout);
  for (auto _ : state) {
    kernels::conv2d_backward_filter_serial(gy.data(), x.data(), gw.data(), gb.data(), B,
                                           Cin, H, W, Cout, K, PAD);
    benchmark::DoNotOptimize(gw.data());
  }
}

void bm_conv2d_backward_filter_omp(benchmark::State& state) {
  const auto gy = random_vec(static_cast<int64_t>(B) * Cout * H * W, 4);
  const auto x = random_vec(static_cast<int64_t>(B) * Cin * H * W, 5);
  std::vector<float> gw(static_cast<int64_t>(Cout) * Cin * K * K), gb(Cout);
  for (auto _ : state) {
    kernels::conv2d_backward_filter_omp(gy.data(), x.data(), gw.data(), gb.data(), B,
                                        Cin, H, W, Cout, K, PAD);
    benchmark::DoNotOptimize(gw.data());
  }
}

void bm_matmul_serial(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_vec(static_cast<int64_t>(n) * n, 6);
  const auto b = random_vec(static_cast<int64_t>(n) * n, 7);
  std::vector<float> c(static_cast<int64_t>(n) * n);
  for (auto _ : state) {
    kernels::matmul_serial(a.data(), b.data(), c.data(), n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
}

void bm_matmul_omp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_vec(static_cast<int64_t>(n) * n, 6);
  const auto b = random_vec(static_cast<int64_t>(n) * n, 7);
  std::vector<float> c(static_cast<int64_t>(n) * n);
  for (auto _ : state) {
    kernels::matmul_omp(a.data(), b.data(), c.data(), n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
}

void bm_maxpool_serial(benchmark::State& state) {
  const auto x = random_vec(static_cast<int64_t>(B) * Cout * H * W, 8);
  std::vector<float> y(static_cast<int64_t>(B) * Cout * H * (W / 5));
  std::vector<int64_t> argmax(y.size());
  for (auto _ : state) {
    kernels::maxpool_forward_serial(x.data(), y.data(), argmax.data(), B, Cout, H, W, 1, 5);
    benchmark::DoNotOptimize(y.data());
  }
}

void bm_maxpool_omp(benchmark::State& state) {
  const auto x = random_vec(static_cast<int64_t>(B) * Cout * H * W, 8);
  std::vector<float> y(static_cast<int64_t>(B) * Cout * H * (W / 5));
  std::vector<int64_t> argmax(y.size());
  for (auto _ : state) {
    kernels::maxpool_forward_omp(x.data(), y.data(), argmax.data(), B, Cout, H, W, 1, 5);
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(bm_conv2d_serial);
BENCHMARK(bm_conv2d_omp);
BENCHMARK(bm_conv2d_backward_filter_serial);
BENCHMARK(bm_conv2d_backward_filter_omp);
BENCHMARK(bm_matmul_serial)->Arg(64)->Arg(256);
BENCHMARK(bm_matmul_omp)->Arg(64)->Arg(256);
BENCHMARK(bm_maxpool_serial);
BENCHMARK(bm_maxpool_omp);

BENCHMARK_MAIN();
