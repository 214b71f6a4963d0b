// Copyright (c) 2026 The SLT Authors. All Rights Reserved.
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

#include <doctest.h>

#include "slt/errors.hpp"
#include "slt/tokens.hpp"
#include "support.hpp"

using namespace slt;
using namespace slt::testing;

namespace {

// Triple loop over the flattened leading axes.
std::vector<double> naive_matmul(const Tensor<double>& a, const Tensor<double>& b) {
  const auto k = b.dim(0), n = b.dim(1), m = a.size() / k;
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) out[i * n + j] += a.data()[i * k + p] * b.data()[p * n + j];
  return out;
}

}  // namespace

TEST_CASE("tensor construction validates shape") {
  CHECK_THROWS_AS(Tensor<float>({2, 3}, std::vector<float>(5)), ShapeError);
  CHECK_THROWS_AS(Tensor<float>::zeros({2, 0}), ShapeError);
  const auto t = Tensor<float>::full({2, 3}, 1.5f);
  CHECK(t.size() == 6);
  CHECK(t.matrix().rows() == 2);
  CHECK(t.matrix().cols() == 3);
  CHECK(Tensor<double>::scalar(2.0).item() == 2.0);
}

TEST_CASE("matmul agrees with a triple loop") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = 1 + rng.below(5), k = 1 + rng.below(5), n = 1 + rng.below(5);
    auto a = random_tensor({2, m, k}, rng, 1.0, false);
    auto b = random_tensor({k, n}, rng, 1.0, false);
    const auto got = matmul(a, b);
    const auto want = naive_matmul(a, b);
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(got.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("batched matmul agrees per batch with a triple loop") {
  Rng rng(4);
  auto a = random_tensor({3, 2, 4}, rng, 1.0, false);
  auto b = random_tensor({3, 5, 4}, rng, 1.0, false);
  const auto got = batched_matmul(a, b, true);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 5; ++c) {
        double want = 0;
        for (std::size_t p = 0; p < 4; ++p) want += a.data()[(i * 2 + r) * 4 + p] * b.data()[(i * 5 + c) * 4 + p];
        CHECK(got.data()[(i * 2 + r) * 5 + c] == doctest::Approx(want).epsilon(1e-12));
      }
}

TEST_CASE("permute moves elements to the permuted index") {
  Rng rng(5);
  auto x = random_tensor({2, 3, 4}, rng, 1.0, false);
  const auto y = permute(x, {2, 0, 1});
  REQUIRE(y.shape() == Shape{4, 2, 3});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 4; ++k) CHECK(y.data()[(k * 2 + i) * 3 + j] == x.data()[(i * 3 + j) * 4 + k]);
}

TEST_CASE("softmax rows sum to one and masked keys get exactly zero") {
  Rng rng(6);
  auto scores = random_tensor({1, 2, 3, 4}, rng, 3.0, false);
  AttentionMask mask{1, 3, 4, {1, 1, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0}};
  const auto w = masked_softmax(scores, mask);
  for (std::size_t h = 0; h < 2; ++h) {
    for (std::size_t q = 0; q < 3; ++q) {
      double total = 0;
      for (std::size_t k = 0; k < 4; ++k) {
        const double v = w.data()[(h * 3 + q) * 4 + k];
        if (!mask(0, q, k)) CHECK(v == 0.0);
        total += v;
      }
      // Row 2 is fully masked and produces zeros.
      CHECK(total == doctest::Approx(q == 2 ? 0.0 : 1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("log_softmax is log of softmax") {
  Rng rng(7);
  auto x = random_tensor({3, 6}, rng, 2.0, false);
  const auto a = log_softmax(x);
  const auto b = softmax(x, 1);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(a.data()[i] == doctest::Approx(std::log(b.data()[i])).epsilon(1e-12));
}

TEST_CASE("layer norm output has zero mean and unit variance per row") {
  Rng rng(8);
  auto x = random_tensor({4, 16}, rng, 5.0, false);
  const auto y = layer_norm(x, Tensor<double>::full({16}, 1.0), Tensor<double>::zeros({16}), 1e-12);
  for (std::size_t r = 0; r < 4; ++r) {
    double m = 0, v = 0;
    for (std::size_t c = 0; c < 16; ++c) m += y.data()[r * 16 + c];
    m /= 16;
    for (std::size_t c = 0; c < 16; ++c) v += std::pow(y.data()[r * 16 + c] - m, 2);
    CHECK(m == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
    CHECK(v / 16 == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("dropout is identity in eval mode and inverted-scaled in train mode") {
  Rng rng(9);
  auto x = Tensor<double>::full({100, 100}, 1.0);
  CHECK(dropout(x, 0.5, Mode::Eval, &rng).same(x));
  CHECK(dropout(x, 0.0, Mode::Train, &rng).same(x));
  CHECK_THROWS_AS(dropout(x, 1.0, Mode::Train, &rng), InputError);
  CHECK_THROWS_AS(dropout(x, -0.1, Mode::Train, &rng), InputError);
  const auto y = dropout(x, 0.25, Mode::Train, &rng);
  std::size_t zeros = 0;
  for (double v : y.data()) {
    if (v == 0.0) {
      ++zeros;
    } else {
      CHECK(v == doctest::Approx(1.0 / 0.75));
    }
  }
  CHECK(zeros > 2200);
  CHECK(zeros < 2800);
}

TEST_CASE("gradients accumulate across uses and a tape runs backward once") {
  auto x = Tensor<double>({3}, {1.0, 2.0, 3.0}, true);
  Tape<double> tape;
  TapeScope<double> scope(tape);
  const auto loss = sum(add(scale(x, 2.0), mul(x, x)));
  tape.backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(4.0));
  CHECK(x.grad()[2] == doctest::Approx(8.0));
  CHECK_THROWS_AS(tape.backward(loss), TapeError);
}

TEST_CASE("backward rejects non-scalar losses") {
  auto x = Tensor<double>({2}, {1.0, 2.0}, true);
  Tape<double> tape;
  TapeScope<double> scope(tape);
  CHECK_THROWS_AS(tape.backward(scale(x, 2.0)), TapeError);
}

TEST_CASE("nothing is recorded without an active tape") {
  auto x = Tensor<double>({2}, {1.0, 2.0}, true);
  const auto y = scale(x, 2.0);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("the padding row of an embedding never receives gradient") {
  Rng rng(10);
  auto table = random_tensor({5, 3}, rng);
  TokenMatrix ids(1, 4);
  ids << 0, kPadId, 3, kPadId;
  Tape<double> tape;
  TapeScope<double> scope(tape);
  tape.backward(weighted_sum(embedding(ids, table, kPadId), 1));
  for (std::size_t j = 0; j < 3; ++j) CHECK(table.grad()[kPadId * 3 + j] == 0.0);
  CHECK(table.grad()[0] != 0.0);
  CHECK_THROWS_AS(embedding(TokenMatrix::Constant(1, 1, 5), table, kPadId), InputError);
}

TEST_CASE("tensor_cast preserves values") {
  const auto d = Tensor<double>({2}, {0.5, -1.25});
  const auto f = tensor_cast<float>(d);
  CHECK(f.data()[0] == 0.5f);
  CHECK(f.data()[1] == -1.25f);
}
