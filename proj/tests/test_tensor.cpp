// Copyright 2026 The SCFC Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "scfc/error.hpp"
#include "scfc/optim.hpp"
#include "support.hpp"

using namespace scfc;
using scfc::testing::random_tensor;

namespace {

GradCheckReport check_unary(const std::function<Tensor(const Tensor&)>& op, Shape shape, std::uint64_t seed,
                            double scale = 1.0) {
  Rng rng(seed);
  ParameterStore store;
  Tensor x = store.add("x", random_tensor(shape, rng, scale, true));
  Tensor w = random_tensor(op(x.detach()).shape(), rng);
  return grad_check([&] { return ops::sum(ops::mul(op(x), w)); }, store);
}

}  // namespace

TEST_CASE("matmul matches hand products") {
  const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b = Tensor::from({3, 2}, {7, 8, 9, 10, 11, 12});
  const Tensor c = ops::matmul(a, b);
  CHECK(c.shape() == Shape{2, 2});
  CHECK(c.to_vector() == std::vector<double>{58, 64, 139, 154});
  const Tensor v = ops::matmul(a, Tensor::vector({1, 0, -1}));
  CHECK(v.to_vector() == std::vector<double>{-2, -2});
  CHECK_THROWS_AS(ops::matmul(a, a), Error);
}

TEST_CASE("softmax and log_softmax agree and sum to one") {
  Rng rng(3);
  const Tensor x = random_tensor({7}, rng, 30.0);
  const auto p = ops::softmax(x).to_vector();
  const auto lp = ops::log_softmax(x).to_vector();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    total += p[i];
    CHECK(std::log(p[i]) == doctest::Approx(lp[i]).epsilon(1e-12));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  const auto u = ops::softmax(Tensor::zeros({4})).to_vector();
  for (double v : u) CHECK(v == 0.25);
}

TEST_CASE("every op passes a finite-difference check") {
  CHECK(check_unary([](const Tensor& x) { return ops::sigmoid(x); }, {5}, 1).max_error < 1e-7);
  CHECK(check_unary([](const Tensor& x) { return ops::tanh(x); }, {5}, 2).max_error < 1e-7);
  CHECK(check_unary([](const Tensor& x) { return ops::exp(x); }, {5}, 3).max_error < 1e-7);
  CHECK(check_unary([](const Tensor& x) { return ops::log(ops::add_scalar(ops::exp(x), 0.5)); }, {5}, 4).max_error < 1e-7);
  CHECK(check_unary([](const Tensor& x) { return ops::softmax(x); }, {6}, 5, 3.0).max_error < 1e-7);
  CHECK(check_unary([](const Tensor& x) { return ops::log_softmax(x); }, {6}, 6, 3.0).max_error < 1e-7);
  CHECK(check_unary([](const Tensor& x) { return ops::transpose(x); }, {2, 3}, 7).max_error < 1e-7);
  CHECK(check_unary([](const Tensor& x) { return ops::row_sums(x); }, {3, 4}, 8).max_error < 1e-7);
  CHECK(check_unary([](const Tensor& x) { return ops::mean_rows(x); }, {3, 4}, 9).max_error < 1e-7);
  CHECK(check_unary([](const Tensor& x) { return ops::slice(x, 2, 3); }, {6}, 10).max_error < 1e-7);
  CHECK(check_unary([](const Tensor& x) { return ops::reshape(x, {6}); }, {2, 3}, 11).max_error < 1e-7);
  CHECK(check_unary([](const Tensor& x) { return ops::row(x, 1); }, {3, 2}, 12).max_error < 1e-7);
  CHECK(check_unary([](const Tensor& x) { return ops::pick(x, 2); }, {4}, 13).max_error < 1e-7);
  const std::size_t ids[] = {2, 0, 2};
  CHECK(check_unary([&](const Tensor& x) { return ops::gather_rows(x, ids); }, {3, 2}, 14).max_error < 1e-7);
  // relu away from the kink
  CHECK(check_unary([](const Tensor& x) { return ops::relu(ops::add_scalar(x, 0.05)); }, {1}, 15).max_error < 1e-7);

  Rng rng(20);
  ParameterStore store;
  Tensor a = store.add("a", random_tensor({3, 4}, rng, 1.0, true));
  Tensor b = store.add("b", random_tensor({4, 2}, rng, 1.0, true));
  Tensor v = store.add("v", random_tensor({4}, rng, 1.0, true));
  Tensor w = store.add("w", random_tensor({3}, rng, 1.0, true));
  const auto f = [&] {
    Tensor m = ops::matmul(a, b);
    Tensor mv = ops::matmul(a, v);
    Tensor mr = ops::mul_rows(a, v);
    Tensor ar = ops::add_rows(a, v);
    Tensor wr = ops::weighted_rows(ops::softmax(w), a);
    Tensor cat = ops::concat({ops::reshape(m, {6}), mv, ops::reshape(mr, {12}), ops::reshape(ar, {12}), wr});
    Tensor st = ops::stack_rows({v, ops::scale(v, 2.0)});
    return ops::add(ops::add(ops::dot(cat, cat), ops::sum(ops::mul(st, st))), ops::mean(ops::sub(w, ops::scale(w, 0.5))));
  };
  CHECK(grad_check(f, store).max_error < 1e-7);
}

TEST_CASE("order-invariant reductions are bitwise permutation invariant") {
  Rng rng(31);
  std::vector<double> terms(50);
  for (double& t : terms) t = rng.uniform(-1e3, 1e3) * std::pow(10.0, rng.uniform(-8, 8));
  const double base = order_invariant_sum(terms);
  for (int trial = 0; trial < 20; ++trial) {
    for (std::size_t i = terms.size(); i > 1; --i) std::swap(terms[i - 1], terms[rng.next() % i]);
    CHECK(order_invariant_sum(terms) == base);
  }
}

TEST_CASE("leaves accumulate gradients, interior nodes do not") {
  Tensor x = Tensor::vector({1.0, 2.0}, true);
  Tensor y = ops::sum(ops::mul(x, x));
  y.backward();
  CHECK(x.grad()[0] == 2.0);
  y.backward();
  CHECK(x.grad()[0] == 4.0);
  x.zero_grad();
  CHECK(x.grad()[1] == 0.0);
}

TEST_CASE("no-grad mode records nothing") {
  Tensor x = Tensor::vector({1.0, 2.0}, true);
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    const Tensor y = ops::sum(ops::mul(x, x));
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(grad_enabled());
}

TEST_CASE("non-finite results raise numeric errors") {
  try {
    ops::log(Tensor::vector({0.0}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
  }
  CHECK_THROWS_AS(ops::exp(Tensor::vector({1e6})), Error);
}

TEST_CASE("shape mismatches raise dimension errors") {
  try {
    ops::add(Tensor::zeros({2}), Tensor::zeros({3}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Dimension);
  }
}

TEST_CASE("dropout is seeded and inverted") {
  const Tensor x = Tensor::full({1000}, 1.0);
  Rng a(5), b(5);
  const auto da = ops::dropout(x, 0.5, a).to_vector();
  const auto db = ops::dropout(x, 0.5, b).to_vector();
  CHECK(da == db);
  for (double v : da) CHECK((v == 0.0 || v == 2.0));
  Rng c(5);
  CHECK(ops::dropout(x, 0.0, c).to_vector() == x.to_vector());
}
