//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cpiformer/errors.hpp"
#include "cpiformer/rng.hpp"
#include "cpiformer/tape.hpp"
#include "cpiformer/tensor.hpp"
#include "grad_check.hpp"

using namespace cpiformer;
using cpiformer::testing::max_rel_grad_error;

namespace {

Parameter random_param(const std::string &name, int r, int c, Rng &rng, double lo = -1.0,
                       double hi = 1.0) {
  Parameter p(name, r, c);
  p.value.fill_uniform(rng, lo, hi);
  return p;
}

std::string temp_file(const std::string &stem) {
  return std::string("/tmp/cpiformer_test_") + stem + "_" + std::to_string(::getpid());
}

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("forward: worked examples") {
  Tape tape;

  // Uniform softmax.
  Value sm = tape.softmax_rows(tape.constant(Tensor::row({0, 0, 0})));
  for (int c = 0; c < 3; ++c)
    CHECK(tape.data(sm).at(0, c) == doctest::Approx(1.0 / 3).epsilon(1e-12));

  // Identity matmul.
  Tensor eye(3, 3);
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Tensor a(3, 2);
  a.data = {1, 2, 3, 4, 5, 6};
  Value prod = tape.matmul(tape.constant(eye), tape.constant(a));
  CHECK(tape.data(prod).data == a.data);

  // square(mean([1,3])) = 4.
  Value sq = tape.square(tape.mean_all(tape.constant(Tensor::row({1, 3}))));
  CHECK(tape.data(sq).item() == doctest::Approx(4.0));
}

TEST_CASE("softmax rows sum to one within 1e-12") {
  Rng rng(7);
  Tape tape;
  for (int t = 0; t < 20; ++t) {
    Tensor x(5, 8);
    x.fill_uniform(rng, -100, 100);
    Value y = tape.softmax_rows(tape.constant(x));
    for (int r = 0; r < 5; ++r) {
      double sum = 0.0;
      for (int c = 0; c < 8; ++c) sum += tape.data(y).at(r, c);
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("backward: analytic examples") {
  // d/dx sum(x^2) = 2x.
  Parameter x("x", 1, 2);
  x.value.data = {1, 2};
  Tape tape;
  tape.backward(tape.sum_all(tape.square(tape.leaf(x))));
  CHECK(x.grad.data == std::vector<double>{2, 4});

  // A loss made only of constants leaves every parameter untouched.
  Parameter idle("idle", 2, 2);
  Tape t2;
  Value c = t2.mean_all(t2.constant(Tensor::row({5, 7})));
  t2.backward(c);
  for (double g : idle.grad.data) CHECK(g == 0.0);
}

TEST_CASE("backward rejects non-scalar losses") {
  Parameter x("x", 2, 2);
  Tape tape;
  Value v = tape.square(tape.leaf(x));
  CHECK_THROWS_AS(tape.backward(v), NumericError);
}

TEST_CASE("backward resets the tape") {
  Parameter x("x", 1, 1);
  x.value.data = {3};
  Tape tape;
  tape.backward(tape.square(tape.leaf(x)));
  CHECK(x.grad.data[0] == doctest::Approx(6.0));
  CHECK(tape.size() == 0);
}

TEST_CASE("gradients match central differences per op") {
  Rng rng(101);
  Parameter a = random_param("a", 3, 4, rng);
  Parameter b = random_param("b", 4, 2, rng);
  Parameter e = random_param("e", 3, 4, rng);
  Parameter pos = random_param("pos", 3, 4, rng, 0.5, 1.5);  // bounded away from 0
  Parameter row = random_param("row", 1, 4, rng);
  Tensor weights(3, 4);
  weights.fill_uniform(rng, -1, 1);
  Tensor w32(3, 2);
  w32.fill_uniform(rng, -1, 1);

  SUBCASE("matmul") {
    double err = max_rel_grad_error({&a, &b}, [&](Tape &t) {
      return t.sum_all(t.square(t.matmul(t.leaf(a), t.leaf(b))));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("transpose") {
    double err = max_rel_grad_error({&a}, [&](Tape &t) {
      return t.sum_all(t.square(t.transpose(t.leaf(a))));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("add, sub, mul") {
    double err = max_rel_grad_error({&a, &e}, [&](Tape &t) {
      Value s = t.add(t.leaf(a), t.leaf(e));
      Value d = t.sub(t.leaf(a), t.scale(t.leaf(e), 0.5));
      return t.sum_all(t.mul(s, d));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("div") {
    double err = max_rel_grad_error({&a, &pos}, [&](Tape &t) {
      return t.sum_all(t.div(t.leaf(a), t.leaf(pos)));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("exp") {
    double err = max_rel_grad_error({&a}, [&](Tape &t) {
      return t.sum_all(t.exp(t.leaf(a)));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("relu") {
    double err = max_rel_grad_error({&a}, [&](Tape &t) {
      return t.sum_all(t.relu(t.leaf(a)));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("softplus") {
    double err = max_rel_grad_error({&a}, [&](Tape &t) {
      return t.sum_all(t.softplus(t.leaf(a)));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("square") {
    double err = max_rel_grad_error({&a}, [&](Tape &t) {
      return t.sum_all(t.square(t.leaf(a)));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("softmax_rows") {
    double err = max_rel_grad_error({&a}, [&](Tape &t) {
      return t.sum_all(t.mul(t.softmax_rows(t.leaf(a)), t.constant(weights)));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("layer_norm_rows") {
    double err = max_rel_grad_error({&a}, [&](Tape &t) {
      return t.sum_all(t.mul(t.layer_norm_rows(t.leaf(a)), t.constant(weights)));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("mean_all") {
    double err = max_rel_grad_error({&a}, [&](Tape &t) {
      return t.square(t.mean_all(t.leaf(a)));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("concat_rows and concat_cols") {
    double err = max_rel_grad_error({&a, &e}, [&](Tape &t) {
      Value rows = t.concat_rows(t.leaf(a), t.leaf(e));           // 6x4
      Value cols = t.concat_cols(t.leaf(a), t.scale(t.leaf(e), 2.0));  // 3x8
      return t.add(t.sum_all(t.square(rows)), t.sum_all(t.square(cols)));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("slice_rows and slice_cols") {
    double err = max_rel_grad_error({&a}, [&](Tape &t) {
      Value r = t.slice_rows(t.leaf(a), 1, 2);
      Value c = t.slice_cols(t.leaf(a), 2, 2);
      return t.add(t.sum_all(t.square(r)), t.sum_all(t.square(c)));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("reshape") {
    // [DERIVED] forward is a pure data view: 3x4 seen as 2x6 keeps row-major
    // order, so element (1, 5) of the view is element (2, 3) of the source.
    Tape t0;
    Value v = t0.reshape(t0.leaf(a), 2, 6);
    CHECK(t0.data(v).at(1, 5) == a.value.at(2, 3));
    CHECK_THROWS_AS(t0.reshape(t0.leaf(a), 5, 2), ShapeError);
    double err = max_rel_grad_error({&a}, [&](Tape &t) {
      Value view = t.reshape(t.leaf(a), 2, 6);
      return t.sum_all(t.square(t.matmul(view, t.transpose(view))));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("gather_rows with a repeated index") {
    double err = max_rel_grad_error({&a}, [&](Tape &t) {
      return t.sum_all(t.square(t.gather_rows(t.leaf(a), {0, 2, 2, 1})));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("add_rows and mul_rows") {
    double err = max_rel_grad_error({&a, &row}, [&](Tape &t) {
      Value s = t.add_rows(t.leaf(a), t.leaf(row));
      Value m = t.mul_rows(t.leaf(a), t.leaf(row));
      return t.sum_all(t.mul(s, m));
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("softmax plus matmul chain") {
    double err = max_rel_grad_error({&a, &b}, [&](Tape &t) {
      Value logits = t.matmul(t.softmax_rows(t.leaf(a)), t.leaf(b));  // 3x2
      return t.sum_all(t.mul(logits, t.constant(w32)));
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("shape mismatches name the op") {
  Tape tape;
  Value a = tape.constant(Tensor::zeros(2, 3));
  Value b = tape.constant(Tensor::zeros(2, 3));
  try {
    tape.matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError &err) {
    std::string msg = err.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("2x3") != std::string::npos);
  }
  CHECK_THROWS_AS(tape.add(a, tape.constant(Tensor::zeros(3, 2))), ShapeError);
  CHECK_THROWS_AS(tape.slice_rows(a, 1, 5), ShapeError);
  CHECK_THROWS_AS(tape.gather_rows(a, {0, 7}), ShapeError);
  CHECK_THROWS_AS(tape.add_rows(a, tape.constant(Tensor::zeros(1, 2))), ShapeError);
}

TEST_CASE("non-finite results are rejected") {
  Tape tape;
  Value num = tape.constant(Tensor::row({1.0}));
  Value den = tape.constant(Tensor::row({0.0}));
  CHECK_THROWS_AS(tape.div(num, den), NumericError);
  CHECK_THROWS_AS(tape.exp(tape.constant(Tensor::row({1000.0}))), NumericError);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Parameter w("w", 2, 2);
  w.value.data = {1, 2, 3, 4};
  std::vector<double> before = w.value.data;
  AdamState state;
  adam_step({&w}, state, AdamConfig{});
  CHECK(w.value.data == before);
}

TEST_CASE("adam: first step is the bias-corrected signed update") {
  const double lr = 0.01, g = 3.0, w0 = 5.0, eps = 1e-8;
  Parameter w("w", 1, 1);
  w.value.data = {w0};
  w.grad.data = {g};
  AdamState state;
  AdamConfig cfg;
  cfg.lr = lr;
  adam_step({&w}, state, cfg);
  // At t=1 the bias corrections cancel the decay factors exactly:
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  const double expect = w0 - lr * g / (std::abs(g) + eps);
  CHECK(w.value.data[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("adam: two steps on a quadratic, against a scalar rerun") {
  // Oracle: plain scalar transcription of the update equations.
  double m = 0, v = 0, w_ref = 1.0;
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= 2; ++t) {
    double g = 2.0 * w_ref;  // d/dw w^2
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    double m_hat = m / (1 - std::pow(b1, t));
    double v_hat = v / (1 - std::pow(b2, t));
    w_ref -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }

  Parameter w("w", 1, 1);
  w.value.data = {1.0};
  AdamState state;
  AdamConfig cfg;
  cfg.lr = lr;
  for (int t = 0; t < 2; ++t) {
    w.zero_grad();
    Tape tape;
    tape.backward(tape.square(tape.leaf(w)));
    adam_step({&w}, state, cfg);
  }
  CHECK(w.value.data[0] == doctest::Approx(w_ref).epsilon(1e-12));
  CHECK(w.value.data[0] * w.value.data[0] < 1.0);  // f decreased from f(1)=1
}

TEST_CASE("same seed gives identical initialization") {
  Rng r1(42), r2(42);
  Tensor a(4, 7), b(4, 7);
  a.fill_uniform(r1, -0.5, 0.5);
  b.fill_uniform(r2, -0.5, 0.5);
  CHECK(a.data == b.data);
}

TEST_CASE("checkpoint: byte-exact round trip") {
  Rng rng(99);
  Parameter p1 = random_param("layer.w", 3, 5, rng);
  Parameter p2 = random_param("layer.b", 1, 5, rng);

  std::string f1 = temp_file("ckpt1"), f2 = temp_file("ckpt2");
  save_checkpoint(f1, {&p1, &p2});

  Parameter q1("layer.w", 3, 5), q2("layer.b", 1, 5);
  load_checkpoint(f1, {&q1, &q2});
  CHECK(q1.value.data == p1.value.data);
  CHECK(q2.value.data == p2.value.data);

  save_checkpoint(f2, {&q1, &q2});
  CHECK(slurp(f1) == slurp(f2));
  std::remove(f1.c_str());
  std::remove(f2.c_str());
}

TEST_CASE("checkpoint: mismatches are rejected") {
  Rng rng(100);
  Parameter p = random_param("w", 2, 2, rng);
  std::string f = temp_file("ckpt3");
  save_checkpoint(f, {&p});

  Parameter wrong_shape("w", 2, 3);
  CHECK_THROWS_AS(load_checkpoint(f, {&wrong_shape}), CheckpointError);

  Parameter wrong_name("v", 2, 2);
  CHECK_THROWS_AS(load_checkpoint(f, {&wrong_name}), CheckpointError);

  Parameter extra("x", 1, 1);
  Parameter ok("w", 2, 2);
  CHECK_THROWS_AS(load_checkpoint(f, {&ok, &extra}), CheckpointError);

  std::ofstream(f, std::ios::binary) << "JUNKJUNKJUNK";
  CHECK_THROWS_AS(load_checkpoint(f, {&ok}), CheckpointError);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/path/ckpt", {&ok}), IoError);
  std::remove(f.c_str());
}
