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

#include "gradcheck.hpp"
#include "sedkit/tensor.hpp"

using namespace sedkit;
using sedkit::testing::GradCheck;
using sedkit::testing::random_tensor;

using T64 = Tensor<double>;
using Tape64 = Tape<double>;

TEST_CASE("matmul identity and dot product") {
  auto eye = T64::from_data({2, 2}, {1, 0, 0, 1});
  auto b = T64::from_data({2, 2}, {5, 6, 7, 8});
  auto out = matmul<double>(nullptr, eye, b);
  CHECK(out.value() == std::vector<double>{5, 6, 7, 8});

  auto row = T64::from_data({1, 2}, {1, 2});
  auto col = T64::from_data({2, 1}, {3, 4});
  CHECK(matmul<double>(nullptr, row, col).value()[0] == 11.0);
}

TEST_CASE("matmul shape error names both shapes") {
  auto a = T64::zeros({2, 3});
  auto b = T64::zeros({2, 3});
  CHECK_THROWS_WITH_AS(matmul<double>(nullptr, a, b),
                       doctest::Contains("[2x3]"), ShapeError);
}

TEST_CASE("matmul gradients match finite differences") {
  Rng rng(42);
  auto a = random_tensor({3, 4}, rng);
  auto b = random_tensor({4, 2}, rng);
  GradCheck gc;
  gc.run({a, b}, [&](Tape64* tape) {
    auto prod = matmul(tape, a, b);
    auto sq = mul(tape, prod, prod);
    return sum_all(tape, sq);
  });
  CHECK(gc.failures == 0);
  CHECK(gc.checked == 20);
}

TEST_CASE("conv2d delta kernel reproduces the input") {
  Rng rng(7);
  auto x = random_tensor({1, 1, 5, 5}, rng, 1.0, false);
  std::vector<double> w(25, 0.0);
  w[12] = 1.0;  // center of the 5x5 kernel
  auto kernel = T64::from_data({1, 1, 5, 5}, std::move(w));
  auto bias = T64::zeros({1});
  auto y = conv2d<double>(nullptr, x, kernel, bias, 2);
  for (int i = 0; i < 25; ++i) CHECK(y.value()[i] == doctest::Approx(x.value()[i]));
}

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(3);
  auto x = random_tensor({2, 3, 8, 6}, rng, 0.5);
  auto w = random_tensor({4, 3, 5, 5}, rng, 0.3);
  auto bias = random_tensor({4}, rng, 0.1);
  GradCheck gc;
  gc.run({w, bias}, [&](Tape64* tape) {
    auto y = conv2d(tape, x, w, bias, 2);
    return sum_all(tape, mul(tape, y, y));
  });
  CHECK(gc.failures == 0);
}

TEST_CASE("conv2d channel mismatch raises shape error") {
  auto x = T64::zeros({1, 2, 4, 4});
  auto w = T64::zeros({3, 5, 5, 5});
  auto bias = T64::zeros({3});
  CHECK_THROWS_AS(conv2d<double>(nullptr, x, w, bias, 2), ShapeError);
}

TEST_CASE("maxpool collapses [[1,2,3,4,5]] to [[5]]") {
  auto x = T64::from_data({1, 1, 1, 5}, {1, 2, 3, 4, 5});
  auto y = maxpool2d<double>(nullptr, x, 1, 5);
  CHECK(y.value()[0] == 5.0);
}

TEST_CASE("maxpool constant input routes gradient to first window element") {
  auto x = T64::from_data({1, 1, 1, 10}, std::vector<double>(10, 2.0), true);
  Tape64 tape;
  auto y = maxpool2d(&tape, x, 1, 5);
  auto loss = sum_all(&tape, y);
  tape.backward(loss);
  const std::vector<double> expect = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0};
  CHECK(x.grad() == expect);
}

TEST_CASE("maxpool requires divisible dimensions") {
  auto x = T64::zeros({1, 1, 4, 7});
  CHECK_THROWS_WITH_AS(maxpool2d<double>(nullptr, x, 1, 5),
                       doctest::Contains("not divisible"), ShapeError);
}

TEST_CASE("the pool plan collapses 40 bands to one") {
  Rng rng(9);
  auto x = random_tensor({1, 1, 4, 40}, rng, 1.0, false);
  auto y = maxpool2d<double>(nullptr, x, 1, 5);
  y = maxpool2d<double>(nullptr, y, 1, 4);
  y = maxpool2d<double>(nullptr, y, 1, 2);
  CHECK(y.shape() == std::vector<int>{1, 1, 4, 1});
}

TEST_CASE("elementwise examples") {
  auto x = T64::from_data({3}, {0.0, -3.0, 3.0});
  CHECK(sigmoid<double>(nullptr, x).value()[0] == 0.5);
  auto r = relu<double>(nullptr, x);
  CHECK(r.value()[1] == 0.0);
  CHECK(r.value()[2] == 3.0);
}

TEST_CASE("log rejects non-positive input") {
  auto x = T64::from_data({2}, {1.0, -0.5});
  CHECK_THROWS_AS(log_op<double>(nullptr, x), DomainError);
}

TEST_CASE("tanh gradients match finite differences tightly") {
  Rng rng(5);
  auto x = random_tensor({10}, rng, 2.0);
  GradCheck gc;
  gc.tol_rel = 1e-6;
  gc.run({x}, [&](Tape64* tape) { return sum_all(tape, mul(tape, tanh_op(tape, x), x)); });
  CHECK(gc.failures == 0);
}

TEST_CASE("exp and log gradients match finite differences") {
  Rng rng(6);
  auto x = random_tensor({8}, rng, 1.0);
  GradCheck gc;
  gc.run({x}, [&](Tape64* tape) {
    auto pos = exp_op(tape, x);  // strictly positive, safe for log
    return sum_all(tape, log_op(tape, pos));
  });
  CHECK(gc.failures == 0);
}

TEST_CASE("concat_features concatenates and splits gradient exactly") {
  auto a = T64::from_data({1, 2}, {1, 2}, true);
  auto b = T64::from_data({1, 1}, {3}, true);
  Tape64 tape;
  auto cat = concat_cols(&tape, a, b);
  CHECK(cat.value() == std::vector<double>{1, 2, 3});
  auto w = T64::from_data({1, 3}, {10, 20, 30});
  auto loss = sum_all(&tape, mul(&tape, cat, w));
  tape.backward(loss);
  CHECK(a.grad() == std::vector<double>{10, 20});
  CHECK(b.grad() == std::vector<double>{30});
}

TEST_CASE("concat shape contract for conditioning width") {
  auto h = T64::zeros({8, 128});
  auto y = T64::zeros({8, 6});
  auto cat = concat_cols<double>(nullptr, h, y);
  CHECK(cat.shape() == std::vector<int>{8, 134});
  auto bad = T64::zeros({7, 6});
  CHECK_THROWS_AS(concat_cols<double>(nullptr, h, bad), ShapeError);
}

TEST_CASE("backward of sum gives ones; backward of sum of squares gives 2x") {
  Rng rng(8);
  auto x = random_tensor({6}, rng);
  {
    Tape64 tape;
    auto loss = sum_all(&tape, x);
    tape.backward(loss);
    for (double g : x.grad()) CHECK(g == 1.0);
  }
  x.zero_grad();
  {
    Tape64 tape;
    auto loss = sum_all(&tape, mul(&tape, x, x));
    tape.backward(loss);
    for (size_t i = 0; i < x.grad().size(); ++i)
      CHECK(x.grad()[i] == doctest::Approx(2.0 * x.value()[i]));
  }
}

TEST_CASE("backward twice without reset is an error; non-scalar loss is an error") {
  auto x = T64::from_data({2}, {1.0, 2.0}, true);
  Tape64 tape;
  auto y = mul(&tape, x, x);
  auto loss = sum_all(&tape, y);
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), UsageError);
  tape.reset();
  auto y2 = mul(&tape, x, x);
  CHECK_THROWS_AS(tape.backward(y2), UsageError);
}

TEST_CASE("loss must come from the tape it is differentiated on") {
  auto x = T64::from_data({1}, {2.0}, true);
  Tape64 tape;
  CHECK_THROWS_AS(tape.backward(x), UsageError);
}

TEST_CASE("forward results are identical across runs") {
  Rng rng(11);
  auto x = random_tensor({4, 4}, rng, 1.0, false);
  auto w = random_tensor({4, 4}, rng, 1.0, false);
  auto y1 = matmul<double>(nullptr, x, w);
  auto y2 = matmul<double>(nullptr, x, w);
  CHECK(y1.value() == y2.value());
}

TEST_CASE("composite conv block + gru-like step matches finite differences") {
  // A miniature of the real network: conv -> relu -> pool -> slice -> matmul
  // -> tanh mixing, all on one tape.
  Rng rng(12);
  auto x = random_tensor({1, 1, 4, 10}, rng, 0.7, false);
  auto w = random_tensor({2, 1, 5, 5}, rng, 0.4);
  auto bias = random_tensor({2}, rng, 0.1);
  auto wg = random_tensor({2, 3}, rng, 0.5);
  GradCheck gc;
  gc.run({w, bias, wg}, [&](Tape64* tape) {
    auto h = conv2d(tape, x, w, bias, 2);
    h = relu(tape, h);
    h = maxpool2d(tape, h, 1, 5);            // [1,2,4,2]
    h = maxpool2d(tape, h, 1, 2);            // [1,2,4,1]
    auto f = channels_to_features(tape, h);  // [1,4,2]
    auto s = time_slice(tape, f, 1);         // [1,2]
    auto z = tanh_op(tape, matmul(tape, s, wg));
    return sum_all(tape, mul(tape, z, z));
  });
  CHECK(gc.failures == 0);
}

TEST_CASE("gradient mass is preserved through concat and pooling round trips") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = random_tensor({3, 4}, rng);
    auto b = random_tensor({3, 2}, rng);
    Tape64 tape;
    auto cat = concat_cols(&tape, a, b);
    auto loss = sum_all(&tape, cat);
    tape.backward(loss);
    double mass = 0.0;
    for (double g : a.grad()) mass += g;
    for (double g : b.grad()) mass += g;
    CHECK(mass == doctest::Approx(18.0));  // grad of sum is 1 per element
  }
}

TEST_CASE("reshape and stack/slice round trips") {
  Rng rng(14);
  auto x = random_tensor({2, 3, 4}, rng, 1.0, true);
  Tape64 tape;
  std::vector<T64> steps;
  for (int t = 0; t < 3; ++t) steps.push_back(time_slice(&tape, x, t));
  auto restacked = stack_time(&tape, steps);
  CHECK(restacked.value() == x.value());
  auto loss = sum_all(&tape, restacked);
  tape.backward(loss);
  for (double g : x.grad()) CHECK(g == 1.0);
}
