//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cmath>
#include <vector>

#include "mgm/core/error.hpp"
#include "mgm/core/rng.hpp"
#include "mgm/gradcheck/gradcheck.hpp"
#include "mgm/tensorcore/tape.hpp"

using mgm::DataError;
using mgm::NumericalError;
using mgm::RngStream;
using mgm::ShapeError;
using mgm::tensorcore::Parameter;
using mgm::tensorcore::ParamStore;
using mgm::tensorcore::PoolMode;
using mgm::tensorcore::Tape;
using mgm::tensorcore::Tensor;
using mgm::tensorcore::Var;

TEST_CASE("matmul with an identity is the identity") {
  Tape tape;
  Var eye = tape.constant(Tensor::of({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  const Tensor m = Tensor::of({{2, -1, 0.5}, {3, 4, -2}, {0, 1, 7}});
  Var out = tape.matmul(eye, tape.constant(m));
  CHECK(tape.value(out).identical(m));
}

TEST_CASE("softmax of a uniform row is uniform") {
  Tape tape;
  Var out = tape.softmax_rows(tape.constant(Tensor::of({{0, 0}})));
  CHECK(tape.value(out).at(0, 0) == doctest::Approx(0.5));
  CHECK(tape.value(out).at(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("mse of unit difference is one") {
  Tape tape;
  Var loss = tape.mse_loss(tape.constant(Tensor::of({{0, 0}})),
                           Tensor::of({{1, 1}}));
  CHECK(tape.value(loss).scalar_value() == doctest::Approx(1.0));
}

TEST_CASE("cross entropy of uniform logits is ln K") {
  for (std::size_t k: {2u, 3u, 7u}) {
    Tape tape;
    Var loss = tape.cross_entropy(tape.constant(Tensor(1, k, 0.0)), {1});
    CHECK(tape.value(loss).scalar_value() ==
          doctest::Approx(std::log(static_cast<double>(k))));
  }
}

TEST_CASE("embedding lookup gathers rows and scatters adjoints") {
  ParamStore store;
  Parameter &table = store.create("t", Tensor::of({{1, 2, 3}, {4, 5, 6}}));
  Tape tape;
  const std::vector<int> ids{0, 0};
  Var rows = tape.embedding_lookup(table, ids);
  CHECK(tape.value(rows).at(0, 1) == 2);
  CHECK(tape.value(rows).at(1, 1) == 2);
  Var loss = tape.sum_all(rows);
  tape.backward(loss);
  // Row 0 was gathered twice: its gradient is 2 everywhere, row 1 untouched.
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(table.grad.at(0, c) == 2.0);
    CHECK(table.grad.at(1, c) == 0.0);
  }
}

TEST_CASE("lookup output tracks only the matching table row") {
  ParamStore store;
  Parameter &table = store.create("t", Tensor::of({{1, 1}, {2, 2}, {3, 3}}));
  auto run = [&table]() {
    Tape tape;
    Var rows = tape.embedding_lookup(table, std::vector<int>{0, 2});
    return tape.value(rows);
  };
  const Tensor before = run();
  table.value.at(1, 0) = 99.0;  // row that was never looked up
  CHECK(run().identical(before));
  table.value.at(2, 0) = 42.0;
  CHECK(run().at(1, 0) == 42.0);
}

TEST_CASE("trainable batch norm normalizes columns with affine") {
  ParamStore store;
  Parameter &gamma = store.create("g", Tensor::of({{1.0}}));
  Parameter &beta = store.create("b", Tensor::of({{0.0}}));
  {
    Tape tape;
    Var out = tape.trainable_batch_norm(tape.constant(Tensor::of({{1}, {3}})),
                                        tape.param(gamma), tape.param(beta));
    CHECK(tape.value(out).at(0, 0) == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(tape.value(out).at(1, 0) == doctest::Approx(1.0).epsilon(1e-4));
  }
  beta.value.at(0, 0) = 5.0;
  {
    Tape tape;
    Var out = tape.trainable_batch_norm(tape.constant(Tensor::of({{1}, {3}})),
                                        tape.param(gamma), tape.param(beta));
    CHECK(tape.value(out).at(0, 0) == doctest::Approx(4.0).epsilon(1e-4));
    CHECK(tape.value(out).at(1, 0) == doctest::Approx(6.0).epsilon(1e-4));
  }
}

TEST_CASE("backward of a sum yields ones; unreached parameters stay zero") {
  ParamStore store;
  Parameter &p = store.create("p", Tensor::of({{1, 2}, {3, 4}}));
  Parameter &q = store.create("q", Tensor::of({{5, 6}}));
  Tape tape;
  Var loss = tape.sum_all(tape.param(p));
  tape.backward(loss);
  for (std::size_t i = 0; i < p.grad.size(); ++i) {
    CHECK(p.grad.data()[i] == 1.0);
  }
  for (std::size_t i = 0; i < q.grad.size(); ++i) {
    CHECK(q.grad.data()[i] == 0.0);
  }
}

TEST_CASE("backward twice on one tape is an error") {
  ParamStore store;
  Parameter &p = store.create("p", Tensor::of({{1.0}}));
  Tape tape;
  Var loss = tape.sum_all(tape.param(p));
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), DataError);
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  Var v = tape.constant(Tensor::of({{1, 2}}));
  CHECK_THROWS_AS(tape.backward(v), ShapeError);
}

TEST_CASE("shape mismatches are explicit errors") {
  Tape tape;
  Var a = tape.constant(Tensor(2, 3));
  Var b = tape.constant(Tensor(3, 2));
  CHECK_THROWS_AS(tape.mul(a, b), ShapeError);
  CHECK_THROWS_AS(tape.add(a, b), ShapeError);
  CHECK_THROWS_AS(tape.matmul(a, a), ShapeError);
}

TEST_CASE("non-finite results trip a numerical error") {
  Tape tape;
  Var big = tape.constant(Tensor(1, 1, 1e308));
  CHECK_THROWS_AS(tape.mul(big, big), NumericalError);
}

TEST_CASE("backward scales exactly with power-of-two loss factors") {
  RngStream rng(21);
  ParamStore store;
  Tensor init(3, 3);
  for (std::size_t i = 0; i < init.size(); ++i) {
    init.data()[i] = rng.normal();
  }
  Parameter &p = store.create("p", init);
  const Tensor target = Tensor(3, 3, 0.25);
  auto grads_for = [&](double alpha) {
    store.zero_all_grads();
    Tape tape;
    Var loss = tape.scale(tape.mse_loss(tape.param(p), target), alpha);
    tape.backward(loss);
    return p.grad;
  };
  const Tensor g1 = grads_for(1.0);
  const Tensor g2 = grads_for(2.0);
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK(g2.data()[i] == 2.0 * g1.data()[i]);  // exact for powers of two
  }
}

TEST_CASE("forward and gradients are bit-deterministic") {
  auto run = []() {
    RngStream rng(99);
    ParamStore store;
    Tensor init(4, 4);
    for (std::size_t i = 0; i < init.size(); ++i) {
      init.data()[i] = rng.normal();
    }
    Parameter &p = store.create("p", init);
    Tape tape;
    Var h = tape.relu(tape.matmul(tape.param(p), tape.param(p)));
    Var loss = tape.mse_loss(h, Tensor(4, 4, 0.5));
    tape.backward(loss);
    return std::make_pair(tape.value(loss).scalar_value(), p.grad);
  };
  const auto [l1, g1] = run();
  const auto [l2, g2] = run();
  CHECK(l1 == l2);
  CHECK(g1.identical(g2));
}

TEST_CASE("pool_rows modes") {
  Tape tape;
  Var z = tape.constant(Tensor::of({{1, 2}, {3, 4}}));
  Var mean = tape.pool_rows(z, {{0, 1}}, PoolMode::mean);
  CHECK(tape.value(mean).at(0, 0) == 2.0);
  CHECK(tape.value(mean).at(0, 1) == 3.0);
  Var sum = tape.pool_rows(z, {{0, 1}}, PoolMode::sum);
  CHECK(tape.value(sum).at(0, 0) == 4.0);
  CHECK(tape.value(sum).at(0, 1) == 6.0);
  Var single = tape.pool_rows(z, {{1}}, PoolMode::max);
  CHECK(tape.value(single).at(0, 0) == 3.0);
  CHECK(tape.value(single).at(0, 1) == 4.0);
}

TEST_CASE("finite-difference suite passes for every op") {
  const auto outcomes = mgm::gradcheck::run_suite(20260808);
  for (const auto &o: outcomes) {
    INFO(o.name, " max_rel_err=", o.max_rel_error);
    CHECK(o.ok);
  }
}
