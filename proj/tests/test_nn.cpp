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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "sedkit/nn.hpp"

using namespace sedkit;
using sedkit::testing::GradCheck;
using sedkit::testing::random_tensor;

using T64 = Tensor<double>;
using Tape64 = Tape<double>;

TEST_CASE("glorot init is seeded, bounded, and centered") {
  Rng rng1(7), rng2(7);
  auto a = glorot_uniform<double>({50, 40}, 50, 40, rng1);
  auto b = glorot_uniform<double>({50, 40}, 50, 40, rng2);
  CHECK(a.value() == b.value());

  const double limit = std::sqrt(6.0 / 90.0);
  double sum = 0.0;
  Rng rng3(11);
  auto big = glorot_uniform<double>({100000}, 50, 40, rng3);
  for (double v : big.value()) {
    CHECK(std::abs(v) <= limit);
    sum += v;
  }
  // Standard error of the mean for U(-limit, limit) over n samples.
  const double se = limit / std::sqrt(3.0) / std::sqrt(1e5);
  CHECK(std::abs(sum / 1e5) <= 3.0 * se);
}

TEST_CASE("batchnorm train mode standardizes per channel") {
  Rng rng(3);
  auto bn = BatchNorm2d<double>::init(3);
  auto x = random_tensor({4, 3, 5, 6}, rng, 2.0, false);
  // Shift the channels so there is something to normalize away.
  for (int64_t i = 0; i < x.numel(); ++i) x.mutable_value()[i] += (i % 3) * 1.5;
  auto y = bn.forward(nullptr, x, true);
  const int64_t plane = 5 * 6;
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0, sq = 0.0;
    for (int b = 0; b < 4; ++b)
      for (int64_t i = 0; i < plane; ++i) {
        const double v = y.value()[(b * 3 + c) * plane + i];
        sum += v;
        sq += v * v;
      }
    const double mean = sum / (4 * plane);
    CHECK(std::abs(mean) < 1e-5);
    CHECK(sq / (4 * plane) - mean * mean == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("batchnorm affine output has requested mean and std") {
  Rng rng(4);
  auto bn = BatchNorm2d<double>::init(1);
  bn.scale.mutable_value()[0] = 2.0;
  bn.shift.mutable_value()[0] = 3.0;
  auto x = random_tensor({2, 1, 10, 10}, rng, 1.0, false);
  auto y = bn.forward(nullptr, x, true);
  double sum = 0.0, sq = 0.0;
  for (double v : y.value()) {
    sum += v;
    sq += v * v;
  }
  const double mean = sum / y.numel();
  const double stddev = std::sqrt(sq / y.numel() - mean * mean);
  CHECK(mean == doctest::Approx(3.0).epsilon(1e-4));
  CHECK(stddev == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("batchnorm eval with unit running stats is the identity") {
  Rng rng(5);
  auto bn = BatchNorm2d<double>::init(2);
  auto x = random_tensor({1, 2, 4, 4}, rng, 1.0, false);
  auto y = bn.forward(nullptr, x, false);
  for (int64_t i = 0; i < x.numel(); ++i)
    CHECK(y.value()[i] == doctest::Approx(x.value()[i]).epsilon(1e-5));
}

TEST_CASE("batchnorm gradients match finite differences") {
  Rng rng(6);
  auto bn = BatchNorm2d<double>::init(2);
  auto x = random_tensor({2, 2, 3, 4}, rng, 1.0, true);
  bn.scale.mutable_value() = {1.3, 0.7};
  bn.shift.mutable_value() = {0.2, -0.1};
  auto target = random_tensor({2, 2, 3, 4}, rng, 1.0, false);
  GradCheck gc;
  gc.run({x, bn.scale, bn.shift}, [&](Tape64* tape) {
    auto y = bn.forward(tape, x, true);
    auto d = sub(tape, y, target);
    return sum_all(tape, mul(tape, d, d));
  });
  CHECK(gc.failures == 0);
}

TEST_CASE("dropout mask is reproducible from its seed and scales kept units") {
  Dropout<double> drop{0.25};
  Rng rng(99);
  auto x = T64::from_data({1000}, std::vector<double>(1000, 1.0));
  auto y = drop.forward(nullptr, x, true, rng);

  // Replay the stream: the mask must reproduce draw for draw.
  Rng replay(99);
  int kept = 0;
  for (int i = 0; i < 1000; ++i) {
    const bool dropped = replay.uniform() < 0.25;
    CHECK(y.value()[i] == (dropped ? 0.0 : doctest::Approx(1.0 / 0.75)));
    kept += dropped ? 0 : 1;
  }
  // Kept fraction within 3 sigma of 1 - rate.
  const double sigma = std::sqrt(0.25 * 0.75 / 1000.0);
  CHECK(std::abs(kept / 1000.0 - 0.75) <= 3.0 * sigma);
}

TEST_CASE("dropout eval mode is the identity and rate 0 is free") {
  Dropout<double> drop{0.25};
  Rng rng(1);
  auto x = T64::from_data({4}, {1, 2, 3, 4});
  auto y = drop.forward(nullptr, x, false, rng);
  CHECK(y.value() == x.value());
  Dropout<double> none{0.0};
  CHECK(none.forward(nullptr, x, true, rng).value() == x.value());
}

TEST_CASE("dropout gradient is the mask") {
  Rng rng(12);
  auto x = random_tensor({50}, rng);
  Dropout<double> drop{0.5};
  Rng drng(77);
  Tape64 tape;
  auto y = drop.forward(&tape, x, true, drng);
  auto loss = sum_all(&tape, y);
  tape.backward(loss);
  for (size_t i = 0; i < x.grad().size(); ++i) {
    const double expect = y.value()[i] == 0.0 ? 0.0 : 2.0;
    CHECK(x.grad()[i] == doctest::Approx(expect));
  }
}

TEST_CASE("gru step: zero weights and zero state give zero output") {
  Rng rng(1);
  auto cell = GruCell<double>::init(3, 4, rng);
  for (auto t : {&cell.wz, &cell.wr, &cell.wh, &cell.uz, &cell.ur, &cell.uh})
    std::fill(t->mutable_value().begin(), t->mutable_value().end(), 0.0);
  auto x = T64::from_data({2, 3}, {1, -2, 3, 0.5, 0, -1});
  auto h0 = T64::zeros({2, 4});
  auto h1 = cell.step(nullptr, x, h0);
  for (double v : h1.value()) CHECK(v == 0.0);
}

TEST_CASE("gru hidden state stays strictly inside (-1, 1)") {
  Rng rng(2);
  auto cell = GruCell<double>::init(5, 4, rng);
  auto h = T64::zeros({3, 4});
  for (int t = 0; t < 50; ++t) {
    auto x = random_tensor({3, 5}, rng, 10.0, false);  // large inputs
    h = cell.step(nullptr, x, h);
    for (double v : h.value()) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("gru gradients for all nine weight arrays match finite differences") {
  Rng rng(21);
  auto cell = GruCell<double>::init(5, 4, rng);
  auto x1 = random_tensor({2, 5}, rng, 1.0, false);
  auto x2 = random_tensor({2, 5}, rng, 1.0, false);
  auto target = random_tensor({2, 4}, rng, 0.5, false);
  GradCheck gc;
  gc.run({cell.wz, cell.wr, cell.wh, cell.uz, cell.ur, cell.uh, cell.bz, cell.br, cell.bh},
         [&](Tape64* tape) {
           auto h0 = T64::zeros({2, 4});
           auto h1 = cell.step(tape, x1, h0);
           auto h2 = cell.step(tape, x2, h1);  // two steps exercise the recurrence
           auto d = sub(tape, h2, target);
           return sum_all(tape, mul(tape, d, d));
         });
  CHECK(gc.failures == 0);
}

TEST_CASE("gru shape mismatch raises shape error") {
  Rng rng(3);
  auto cell = GruCell<double>::init(3, 4, rng);
  auto x = T64::zeros({2, 5});
  auto h = T64::zeros({2, 4});
  CHECK_THROWS_AS(cell.step(nullptr, x, h), ShapeError);
}

TEST_CASE("linear+sigmoid: zero weights give 0.5, large logits saturate") {
  Rng rng(4);
  auto fc = Linear<double>::init(3, 2, rng);
  std::fill(fc.w.mutable_value().begin(), fc.w.mutable_value().end(), 0.0);
  auto x = T64::from_data({1, 3}, {1, 2, 3});
  auto y = sigmoid<double>(nullptr, fc.forward(nullptr, x));
  CHECK(y.value()[0] == 0.5);
  CHECK(y.value()[1] == 0.5);

  fc.b.mutable_value() = {20.0, -20.0};
  auto y2 = sigmoid<double>(nullptr, fc.forward(nullptr, x));
  CHECK(y2.value()[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(y2.value()[1] == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(y2.value()[0] < 1.0);
  CHECK(y2.value()[1] > 0.0);
}

TEST_CASE("linear+sigmoid gradients match finite differences") {
  Rng rng(5);
  auto fc = Linear<double>::init(4, 3, rng);
  auto x = random_tensor({2, 4}, rng, 1.0, false);
  GradCheck gc;
  gc.run({fc.w, fc.b}, [&](Tape64* tape) {
    auto y = sigmoid(tape, fc.forward(tape, x));
    return sum_all(tape, mul(tape, y, y));
  });
  CHECK(gc.failures == 0);
}

TEST_CASE("adam first step moves by about lr in the gradient's direction") {
  auto p = Tensor<float>::from_data({3}, {1.0f, 2.0f, 3.0f}, true);
  p.grad_buffer() = {0.5f, -2.0f, 1e-3f};
  AdamState<float> adam;
  adam.lr = 0.1;
  std::vector<Tensor<float>> params = {p};
  adam.init(params);
  adam.step(params);
  CHECK(p.value()[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-3));
  CHECK(p.value()[1] == doctest::Approx(2.0 + 0.1).epsilon(1e-3));
  CHECK(adam.step_count == 1);
}

TEST_CASE("adam with zero gradients is a parameter no-op but counts the step") {
  auto p = Tensor<float>::from_data({2}, {1.5f, -0.5f}, true);
  p.grad_buffer();  // zeros
  AdamState<float> adam;
  std::vector<Tensor<float>> params = {p};
  adam.init(params);
  adam.step(params);
  adam.step(params);
  CHECK(p.value() == std::vector<float>{1.5f, -0.5f});
  CHECK(adam.step_count == 2);
}

TEST_CASE("adam minimizes (w-3)^2 from 0 within 200 steps at lr 0.1") {
  auto w = Tensor<double>::from_data({1}, {0.0}, true);
  AdamState<double> adam;
  adam.lr = 0.1;
  std::vector<Tensor<double>> params = {w};
  adam.init(params);
  for (int i = 0; i < 200; ++i) {
    w.zero_grad();
    w.grad_buffer()[0] = 2.0 * (w.value()[0] - 3.0);
    adam.step(params);
  }
  CHECK(std::abs(w.value()[0] - 3.0) < 0.1);
}

TEST_CASE("adam rejects a mismatched parameter list") {
  auto p = Tensor<float>::from_data({2}, {1.0f, 2.0f}, true);
  AdamState<float> adam;
  std::vector<Tensor<float>> params = {p};
  adam.init(params);
  params.push_back(p);
  CHECK_THROWS_AS(adam.step(params), UsageError);
}

TEST_CASE("clip_grad_l2 scales (3,4) down to (0.3,0.4) and leaves small grads alone") {
  auto p = Tensor<float>::from_data({2}, {0.0f, 0.0f}, true);
  p.grad_buffer() = {3.0f, 4.0f};
  std::vector<Tensor<float>> group = {p};
  clip_grad_l2<float>(group, 0.5f);
  CHECK(p.grad()[0] == doctest::Approx(0.3f));
  CHECK(p.grad()[1] == doctest::Approx(0.4f));

  p.grad_buffer() = {0.3f, 0.2f};  // norm ~0.36 < 0.5
  clip_grad_l2<float>(group, 0.5f);
  CHECK(p.grad()[0] == 0.3f);
  CHECK(p.grad()[1] == 0.2f);
}

TEST_CASE("clipped norm never exceeds the bound") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = random_tensor({7}, rng, 5.0);
    auto b = random_tensor({3}, rng, 5.0);
    Tape64 tape;
    auto loss = sum_all(&tape, mul(&tape, concat_cols(&tape, reshape(&tape, a, {1, 7}),
                                                      reshape(&tape, b, {1, 3})),
                                   concat_cols(&tape, reshape(&tape, a, {1, 7}),
                                               reshape(&tape, b, {1, 3}))));
    tape.backward(loss);
    std::vector<T64> group = {a, b};
    clip_grad_l2<double>(group, 0.5);
    double sq = 0.0;
    for (const auto& t : group)
      for (double g : t.grad()) sq += g * g;
    CHECK(std::sqrt(sq) <= 0.5 + 1e-9);
  }
}

TEST_CASE("cnn block forward has the contracted shape and eval determinism") {
  Rng rng(41);
  auto block = CnnBlock<double>::init(1, 8, 1, 5, 0.25, false, rng);
  auto x = random_tensor({2, 1, 16, 40}, rng, 1.0, false);
  Rng d1(5);
  auto y = block.forward(nullptr, x, false, d1);
  CHECK(y.shape() == std::vector<int>{2, 8, 16, 8});

  Rng d2(5);
  auto y2 = block.forward(nullptr, x, false, d2);
  CHECK(y.value() == y2.value());  // eval mode twice: identical

  // Train mode with a fixed seed is exactly reproducible.
  Rng d3(9), d4(9);
  auto t1 = block.forward(nullptr, x, true, d3);
  auto t2 = block.forward(nullptr, x, true, d4);
  CHECK(t1.value() == t2.value());
}

TEST_CASE("cnn block rejects indivisible frequency axes") {
  Rng rng(42);
  auto block = CnnBlock<double>::init(1, 4, 1, 7, 0.0, false, rng);
  auto x = random_tensor({1, 1, 4, 40}, rng, 1.0, false);
  Rng d(1);
  CHECK_THROWS_AS(block.forward(nullptr, x, false, d), ShapeError);
}
