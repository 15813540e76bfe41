#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sen/optim.hpp"
#include "sen/rng.hpp"
#include "sen/tape.hpp"
#include "sen/validation.hpp"

using namespace sen;

TEST_CASE("conv1d: hand-evaluated sliding dot product") {
  Tape t;
  Tape::Ref in = t.input({1, 1, 3}, {1, 2, 3});
  Tape::Ref filt = t.input({1, 1, 1, 2}, {1, 1});
  Tape::Ref bias = t.input({1}, {0});
  const Tensor& out = t.val(t.conv1d(in, filt, bias));
  CHECK(out.shape == Shape{1, 1, 2});
  CHECK(out[0] == doctest::Approx(3.0));
  CHECK(out[1] == doctest::Approx(5.0));
}

TEST_CASE("conv1d: zero filters and bias give zero output") {
  Rng rng(4);
  Tape t;
  Tensor in = Tensor::zeros({2, 3, 5});
  for (double& v : in.values) v = rng.uniform(-2, 2);
  const Tensor& out =
      t.val(t.conv1d(t.input(in), t.input(Tensor::zeros({3, 2, 2, 2})), t.input(Tensor::zeros({3}))));
  CHECK(out.shape == Shape{3, 2, 4});
  for (double v : out.values) CHECK(v == 0.0);
}

TEST_CASE("conv1d: identity kernel preserves the input") {
  Tape t;
  const Tensor& out = t.val(t.conv1d(t.input({1, 1, 3}, {1, 2, 3}), t.input({1, 1, 1, 1}, {1}),
                                     t.input({1}, {0})));
  CHECK(out.values == std::vector<double>{1, 2, 3});
}

TEST_CASE("conv1d: shape mismatch names the offending axis") {
  Tape t;
  Tape::Ref in = t.input(Tensor::zeros({2, 3, 5}));
  Tape::Ref filt = t.input(Tensor::zeros({3, 4, 2, 2}));  // wrong channels_in
  Tape::Ref bias = t.input(Tensor::zeros({3}));
  CHECK_THROWS_WITH_AS(t.conv1d(in, filt, bias),
                       doctest::Contains("channels_in"), DimensionError);
  Tape t2;
  CHECK_THROWS_AS(t2.conv1d(t2.input(Tensor::zeros({2, 3, 5})), t2.input(Tensor::zeros({3, 2, 4, 2})),
                            t2.input(Tensor::zeros({3}))),
                  DimensionError);
}

TEST_CASE("dense: identity, zero and hand-evaluated cases") {
  Tape t;
  Tape::Ref x = t.input({3}, {1, 2, 3});
  Tape::Ref identity = t.input({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tape::Ref zero_b = t.input({3}, {0, 0, 0});
  CHECK(t.val(t.dense(identity, x, zero_b)).values == std::vector<double>{1, 2, 3});

  Tape::Ref w0 = t.input(Tensor::zeros({2, 3}));
  Tape::Ref b5 = t.input({2}, {5, 5});
  CHECK(t.val(t.dense(w0, x, b5)).values == std::vector<double>{5, 5});

  Tape::Ref w = t.input({2, 2}, {1, 1, 1, -1});
  Tape::Ref x2 = t.input({2}, {2, 3});
  Tape::Ref b0 = t.input({2}, {0, 0});
  CHECK(t.val(t.dense(w, x2, b0)).values == std::vector<double>{5, -1});

  CHECK_THROWS_AS(t.dense(w, x, b0), DimensionError);
}

TEST_CASE("lstm_step: zero weights halve the cell state") {
  const int hid = 3;
  Tensor W = Tensor::zeros({4 * hid, 2}), U = Tensor::zeros({4 * hid, hid});
  Tensor b = Tensor::zeros({4 * hid});

  SUBCASE("zero initial cell gives zero states") {
    Tape t;
    LstmRefs w{t.input(W), t.input(U), t.input(b)};
    auto [h, c] = lstm_step(t, t.input({2}, {0.7, -0.3}), t.input(Tensor::zeros({hid})),
                            t.input(Tensor::zeros({hid})), w, hid);
    for (double v : t.val(h).values) CHECK(v == doctest::Approx(0.0));
    for (double v : t.val(c).values) CHECK(v == doctest::Approx(0.0));
  }
  SUBCASE("c' = 0.5 c0 and h' = 0.5 tanh(0.5 c0)") {
    Tape t;
    LstmRefs w{t.input(W), t.input(U), t.input(b)};
    const std::vector<double> c0{0.8, -0.4, 1.2};
    auto [h, c] = lstm_step(t, t.input({2}, {0.7, -0.3}), t.input(Tensor::zeros({hid})),
                            t.input({hid}, c0), w, hid);
    for (int i = 0; i < hid; ++i) {
      CHECK(t.val(c).values[(size_t)i] == doctest::Approx(0.5 * c0[(size_t)i]).epsilon(1e-12));
      CHECK(t.val(h).values[(size_t)i] ==
            doctest::Approx(0.5 * std::tanh(0.5 * c0[(size_t)i])).epsilon(1e-12));
    }
  }
  SUBCASE("identical inputs give identical outputs") {
    Rng rng(11);
    Tensor Wr = Tensor::zeros({4 * hid, 2});
    for (double& v : Wr.values) v = rng.uniform(-1, 1);
    auto run = [&]() {
      Tape t;
      LstmRefs w{t.input(Wr), t.input(U), t.input(b)};
      auto [h, c] = lstm_step(t, t.input({2}, {0.5, 0.25}), t.input({hid}, {0.1, 0.2, 0.3}),
                              t.input({hid}, {-0.1, 0.0, 0.1}), w, hid);
      return std::make_pair(t.val(h).values, t.val(c).values);
    };
    CHECK(run() == run());
  }
}

TEST_CASE("activations: definition points") {
  Tape t;
  CHECK(t.val(t.logistic(t.input({1}, {0}))).values[0] == doctest::Approx(0.5));
  const Tensor& r = t.val(t.relu(t.input({2}, {-2, 3})));
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 3.0);
  const Tensor& s = t.val(t.softmax(t.input({3}, {0, 0, 0})));
  for (double v : s.values) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("backward: d(x*x)/dx = 2x against finite differences") {
  Tensor x = Tensor::scalar(3.0);
  x.set_requires_grad(true);
  Tape t;
  Tape::Ref xr = t.param(x);
  t.backward(t.mul(xr, xr));
  CHECK(x.grad[0] == doctest::Approx(6.0).epsilon(1e-12));

  const double fd = grad_check(
      [](Tape& tape, const std::vector<Tape::Ref>& p) { return tape.mul(p[0], p[0]); },
      {{"x", &x}}, 1e-5);
  CHECK(fd < 1e-8);
}

TEST_CASE("backward: constant loss leaves zero gradients") {
  Tensor x = Tensor::vector({1, 2, 3});
  x.set_requires_grad(true);
  Tape t;
  t.param(x);
  t.backward(t.input(Tensor::scalar(42.0)));
  for (double g : x.grad) CHECK(g == 0.0);
}

TEST_CASE("backward: grad of sum(W x) has the ones-and-x structure") {
  Tensor W({2, 3}, {0.5, -1.0, 2.0, 1.5, 0.25, -0.75});
  Tensor x = Tensor::vector({1.0, -2.0, 3.0});
  W.set_requires_grad(true);
  x.set_requires_grad(true);
  Tape t;
  Tape::Ref wr = t.param(W), xr = t.param(x);
  t.backward(t.sum(t.matvec(wr, xr)));
  // dL/dW[i][j] = x[j]; dL/dx[j] = sum_i W[i][j].
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(W.grad[(size_t)(i * 3 + j)] == doctest::Approx(x[j]));
  }
  CHECK(x.grad[0] == doctest::Approx(2.0));
  CHECK(x.grad[1] == doctest::Approx(-0.75));
  CHECK(x.grad[2] == doctest::Approx(1.25));

  const double fd = grad_check(
      [](Tape& tape, const std::vector<Tape::Ref>& p) { return tape.sum(tape.matvec(p[0], p[1])); },
      {{"W", &W}, {"x", &x}}, 1e-5);
  CHECK(fd < 1e-8);
}

TEST_CASE("backward: rejects non-scalar loss and a consumed tape") {
  Tensor x = Tensor::vector({1, 2});
  x.set_requires_grad(true);
  Tape t;
  Tape::Ref xr = t.param(x);
  CHECK_THROWS_AS(t.backward(xr), ContractError);
  Tape::Ref loss = t.sum(xr);
  t.backward(loss);
  CHECK(t.consumed());
  CHECK_THROWS_AS(t.input(Tensor::scalar(1.0)), ContractError);
  CHECK_THROWS_AS(t.backward(loss), ContractError);
}

TEST_CASE("chain rule: composed pipeline equals manually chained gradients") {
  // f(x) = sum(tanh(W x)): compare autodiff against the hand chain rule.
  Tensor W({2, 2}, {0.3, -0.7, 1.1, 0.4});
  Tensor x = Tensor::vector({0.9, -0.5});
  W.set_requires_grad(true);
  x.set_requires_grad(true);
  Tape t;
  Tape::Ref wr = t.param(W), xr = t.param(x);
  t.backward(t.sum(t.tanh_op(t.matvec(wr, xr))));

  // Manual: y = W x, dL/dy_i = 1 - tanh(y_i)^2, dL/dx = W^T dL/dy.
  const double y0 = 0.3 * 0.9 + -0.7 * -0.5;
  const double y1 = 1.1 * 0.9 + 0.4 * -0.5;
  const double d0 = 1.0 - std::tanh(y0) * std::tanh(y0);
  const double d1 = 1.0 - std::tanh(y1) * std::tanh(y1);
  CHECK(x.grad[0] == doctest::Approx(0.3 * d0 + 1.1 * d1).epsilon(1e-12));
  CHECK(x.grad[1] == doctest::Approx(-0.7 * d0 + 0.4 * d1).epsilon(1e-12));
  CHECK(W.grad[0] == doctest::Approx(d0 * 0.9).epsilon(1e-12));
  CHECK(W.grad[3] == doctest::Approx(d1 * -0.5).epsilon(1e-12));
}

TEST_CASE("shared parameter: gradients accumulate across uses") {
  Tensor x = Tensor::scalar(2.0);
  x.set_requires_grad(true);
  Tape t;
  Tape::Ref a = t.param(x);
  Tape::Ref b = t.param(x);  // same node
  CHECK(a.idx == b.idx);
  t.backward(t.add(t.mul(a, a), a));  // x^2 + x -> 2x + 1 = 5
  CHECK(x.grad[0] == doctest::Approx(5.0));
}

TEST_CASE("optimizer: SGD definition arithmetic") {
  Tensor p = Tensor::scalar(1.0);
  p.set_requires_grad(true);
  p.grad[0] = 2.0;
  OptimizerState st;
  st.kind = OptKind::SGD;
  st.learning_rate = 0.1;
  optimizer_step({{"p", &p}}, st);
  CHECK(p[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(st.step_count == 1);
}

TEST_CASE("optimizer: Adam first step moves by about lr") {
  Tensor p = Tensor::vector({1.0, -2.0});
  p.set_requires_grad(true);
  p.grad = {0.5, -3.0};
  OptimizerState st;
  st.kind = OptKind::Adam;
  st.learning_rate = 0.01;
  optimizer_step({{"p", &p}}, st);
  // Bias-corrected first step is a sign step of size lr (up to epsilon).
  CHECK(std::abs(p[0] - 1.0) == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(std::abs(p[1] + 2.0) == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(p[0] < 1.0);
  CHECK(p[1] > -2.0);
}

TEST_CASE("optimizer: zero gradients leave parameters unchanged") {
  for (OptKind kind : {OptKind::SGD, OptKind::Adam}) {
    Tensor p = Tensor::vector({1.0, 2.0, 3.0});
    p.set_requires_grad(true);
    OptimizerState st;
    st.kind = kind;
    st.learning_rate = 0.5;
    optimizer_step({{"p", &p}}, st);
    optimizer_step({{"p", &p}}, st);
    CHECK(p.values == std::vector<double>{1.0, 2.0, 3.0});
  }
}

TEST_CASE("optimizer: non-finite gradient aborts naming the parameter") {
  Tensor p = Tensor::scalar(1.0);
  p.set_requires_grad(true);
  p.grad[0] = std::nan("");
  OptimizerState st;
  CHECK_THROWS_WITH_AS(optimizer_step({{"theta", &p}}, st), doctest::Contains("theta"), NumericError);
}

TEST_CASE("grad_check: logistic at 0 within 1e-6, linear within 1e-10") {
  Tensor x = Tensor::scalar(0.0);
  const double err = grad_check(
      [](Tape& t, const std::vector<Tape::Ref>& p) { return t.logistic(p[0]); }, {{"x", &x}}, 1e-5);
  CHECK(err < 1e-6);

  Tensor y = Tensor::vector({1.0, 2.0});
  const double lin = grad_check(
      [](Tape& t, const std::vector<Tape::Ref>& p) { return t.sum(t.scale(p[0], 3.0)); },
      {{"y", &y}}, 1e-5);
  CHECK(lin < 1e-10);

  CHECK_THROWS_AS(grad_check([](Tape& t, const std::vector<Tape::Ref>& p) { return t.sum(p[0]); },
                             {{"y", &y}}, 0.5),
                  ContractError);
}

TEST_CASE("grad_check: every tape op within its bound") {
  for (const GradCheckEntry& e : check_op_gradients(20240801ULL)) {
    INFO(e.name);
    CHECK(e.rel_err <= (e.smooth_scalar ? 1e-6 : 1e-4));
  }
}

TEST_CASE("grad_check: full SEN + pairwise composition at a tiny config") {
  SENConfig tiny;
  tiny.conv1 = tiny.conv2 = tiny.conv3 = tiny.conv4 = 2;
  tiny.channels = 4;
  tiny.lstm_hidden = 8;
  tiny.k = 2;
  tiny.f = 5;
  tiny.seed = 7;
  CHECK(check_sen_composition(tiny, 99, 2) <= 1e-4);
}

TEST_CASE("forward determinism: identical inputs give bitwise-identical outputs") {
  Rng rng(5);
  Tensor in = Tensor::zeros({2, 2, 6});
  for (double& v : in.values) v = rng.uniform(-1, 1);
  Tensor filt = Tensor::zeros({3, 2, 2, 3});
  for (double& v : filt.values) v = rng.uniform(-1, 1);
  Tensor bias = Tensor::vector({0.1, -0.2, 0.3});
  auto run = [&]() {
    Tape t;
    return t.val(t.softmax(t.reshape(t.conv1d(t.input(in), t.input(filt), t.input(bias)), {12}))).values;
  };
  const auto a = run(), b = run();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("tensor invariants: finite forward results on finite inputs") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Tape t;
    Tensor a = Tensor::zeros({4});
    for (double& v : a.values) v = rng.uniform(-50, 50);
    Tape::Ref r = t.input(a);
    const Tensor& out = t.val(t.softmax(t.logistic(t.tanh_op(t.relu(r)))));
    CHECK(out.all_finite());
  }
}
