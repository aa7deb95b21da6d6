#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "harkit/grad_check.hpp"
#include "harkit/ops.hpp"
#include "harkit/optim.hpp"
#include "harkit/rng.hpp"
#include "harkit/tape.hpp"

using namespace harkit;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

constexpr int kTrials = 20;
constexpr double kOpTol = 1e-4;

}  // namespace

TEST_CASE("linear: identity and forced-zero cases") {
  Tape tape;
  auto x = tape.input(Tensor::matrix(1, 2, {1, 2}));
  auto w = tape.input(Tensor::identity(2));
  auto b = tape.input(Tensor::row({0, 0}));
  auto out = tape.linear(x, w, b);
  CHECK(tape.value(out).at(0, 0) == doctest::Approx(1.0));
  CHECK(tape.value(out).at(0, 1) == doctest::Approx(2.0));

  Tape tape2;
  auto x2 = tape2.input(Tensor::matrix(1, 2, {1, 1}));
  auto w2 = tape2.input(Tensor::matrix(2, 1, {1, 1}));
  auto b2 = tape2.input(Tensor::row({-2}));
  auto out2 = tape2.linear(x2, w2, b2);
  CHECK(tape2.value(out2)[0] == doctest::Approx(0.0));
}

TEST_CASE("linear: shape mismatch raises") {
  Tape tape;
  auto x = tape.input(Tensor::matrix(1, 3, {1, 2, 3}));
  auto w = tape.input(Tensor::identity(2));
  auto b = tape.input(Tensor::row({0, 0}));
  CHECK_THROWS_AS(tape.linear(x, w, b), DimensionError);
}

TEST_CASE("linear: gradients match finite differences") {
  Rng rng(101);
  for (int trial = 0; trial < kTrials; ++trial) {
    ParamStore ps(0);
    const std::size_t n = 1 + rng.index(3), din = 1 + rng.index(4),
                      dout = 1 + rng.index(4);
    ps.insert("x", random_tensor(rng, {n, din}));
    ps.insert("w", random_tensor(rng, {din, dout}));
    ps.insert("b", random_tensor(rng, {dout}));
    auto fn = [](Tape& t, const ParamStore& p) {
      return t.sum(t.tanh(t.linear(t.param(p, "x"), t.param(p, "w"), t.param(p, "b"))));
    };
    CHECK(grad_check(fn, ps) < kOpTol);
  }
}

TEST_CASE("conv1d: identity kernel and strided averaging") {
  Tape tape;
  auto x = tape.input(Tensor::matrix(1, 3, {1, 2, 3}));
  auto k = tape.input(Tensor({1, 1, 1}, {1}));
  auto out = tape.conv1d(x, k, 1, 1);
  CHECK(tape.value(out).shape() == std::vector<std::size_t>{1, 3});
  CHECK(tape.value(out)[0] == doctest::Approx(1));
  CHECK(tape.value(out)[1] == doctest::Approx(2));
  CHECK(tape.value(out)[2] == doctest::Approx(3));

  Tape tape2;
  auto x2 = tape2.input(Tensor::matrix(1, 4, {1, 1, 1, 1}));
  auto k2 = tape2.input(Tensor({1, 1, 2}, {0.5, 0.5}));
  auto out2 = tape2.conv1d(x2, k2, 2, 1);
  CHECK(tape2.value(out2).shape() == std::vector<std::size_t>{1, 2});
  CHECK(tape2.value(out2)[0] == doctest::Approx(1));
  CHECK(tape2.value(out2)[1] == doctest::Approx(1));
}

TEST_CASE("conv1d: kernel longer than input raises window error") {
  Tape tape;
  auto x = tape.input(Tensor::matrix(1, 2, {1, 2}));
  auto k = tape.input(Tensor({1, 1, 3}, {1, 1, 1}));
  CHECK_THROWS_AS(tape.conv1d(x, k, 1, 1), WindowError);
}

TEST_CASE("conv1d: gradients match finite differences") {
  Rng rng(202);
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t groups = 1 + rng.index(2);
    const std::size_t c = groups * (1 + rng.index(2));
    const std::size_t k = 1 + rng.index(3);
    const std::size_t t = k + rng.index(5);
    const std::size_t f = groups * (1 + rng.index(2));
    const std::size_t stride = 1 + rng.index(2);
    ParamStore ps(0);
    ps.insert("x", random_tensor(rng, {c, t}));
    ps.insert("k", random_tensor(rng, {f, c / groups, k}));
    auto fn = [stride, groups](Tape& tp, const ParamStore& p) {
      return tp.sum(tp.tanh(tp.conv1d(tp.param(p, "x"), tp.param(p, "k"), stride, groups)));
    };
    CHECK(grad_check(fn, ps) < kOpTol);
  }
}

TEST_CASE("lstm: zero parameters propagate zero state") {
  Rng rng(7);
  Tape tape;
  auto seq = tape.input(random_tensor(rng, {5, 3}));
  auto w = tape.input(Tensor({3, 8}));
  auto u = tape.input(Tensor({2, 8}));
  auto b = tape.input(Tensor({8}));
  auto out = tape.lstm(seq, w, u, b, false);
  for (double v : tape.value(out).values()) CHECK(v == 0.0);
}

TEST_CASE("lstm: bidirectional output width is 2H") {
  Rng rng(8);
  Tape tape;
  auto seq = tape.input(random_tensor(rng, {4, 3}));
  LstmParams fwd{tape.input(random_tensor(rng, {3, 8})),
                 tape.input(random_tensor(rng, {2, 8})),
                 tape.input(random_tensor(rng, {8}))};
  LstmParams bwd{tape.input(random_tensor(rng, {3, 8})),
                 tape.input(random_tensor(rng, {2, 8})),
                 tape.input(random_tensor(rng, {8}))};
  auto out = recurrent_forward(tape, seq, fwd, bwd);
  CHECK(tape.value(out).shape() == std::vector<std::size_t>{4, 4});
}

TEST_CASE("lstm: empty sequence raises length error") {
  Tape tape;
  auto seq = tape.input(Tensor({0, 3}));
  auto w = tape.input(Tensor({3, 8}));
  auto u = tape.input(Tensor({2, 8}));
  auto b = tape.input(Tensor({8}));
  CHECK_THROWS_AS(tape.lstm(seq, w, u, b, false), LengthError);
}

TEST_CASE("lstm: gradients match finite differences on T=3 D=2 H=2") {
  Rng rng(303);
  for (int trial = 0; trial < kTrials; ++trial) {
    const bool reverse = trial % 2 == 1;
    ParamStore ps(0);
    ps.insert("seq", random_tensor(rng, {3, 2}));
    ps.insert("w", random_tensor(rng, {2, 8}));
    ps.insert("u", random_tensor(rng, {2, 8}));
    ps.insert("b", random_tensor(rng, {8}));
    auto fn = [reverse](Tape& t, const ParamStore& p) {
      return t.sum(t.lstm(t.param(p, "seq"), t.param(p, "w"), t.param(p, "u"),
                          t.param(p, "b"), reverse));
    };
    CHECK(grad_check(fn, ps) < kOpTol);
  }
}

TEST_CASE("lstm: bidirectional gradients match finite differences") {
  Rng rng(304);
  for (int trial = 0; trial < kTrials; ++trial) {
    ParamStore ps(0);
    ps.insert("seq", random_tensor(rng, {3, 2}));
    for (const char* side : {"f", "b"}) {
      ps.insert(std::string(side) + ".w", random_tensor(rng, {2, 8}));
      ps.insert(std::string(side) + ".u", random_tensor(rng, {2, 8}));
      ps.insert(std::string(side) + ".b", random_tensor(rng, {8}));
    }
    auto fn = [](Tape& t, const ParamStore& p) {
      LstmParams fwd{t.param(p, "f.w"), t.param(p, "f.u"), t.param(p, "f.b")};
      LstmParams bwd{t.param(p, "b.w"), t.param(p, "b.u"), t.param(p, "b.b")};
      return t.sum(t.tanh(recurrent_forward(t, t.param(p, "seq"), fwd, bwd)));
    };
    CHECK(grad_check(fn, ps) < kOpTol);
  }
}

TEST_CASE("softmax: symmetry, stability, closed form") {
  Tensor a = softmax(Tensor::row({0, 0, 0}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(1.0 / 3));

  Tensor b = softmax(Tensor::row({1000, 1000}));
  CHECK(b[0] == doctest::Approx(0.5));
  CHECK(b[1] == doctest::Approx(0.5));

  Tensor c = softmax(Tensor::row({std::log(2.0), 0}));
  CHECK(c[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(c[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("softmax: sums to one and is shift invariant") {
  Rng rng(404);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.index(6);
    Tensor v = random_tensor(rng, {n}, -30.0, 30.0);
    Tensor p = softmax(v);
    double sum = 0.0;
    for (double x : p.values()) {
      CHECK(x > 0.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);

    const double shift = rng.uniform(-100.0, 100.0);
    Tensor vs = v;
    for (auto& x : vs.values()) x += shift;
    Tensor ps = softmax(vs);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(p[i] - ps[i]) < 1e-9);
  }
}

TEST_CASE("mean_kl: identity, closed form, sign") {
  Tensor p = Tensor::row({0.1, 0.2, 0.3, 0.4});
  CHECK(mean_kl(p, p) == 0.0);

  // (1/4) * (0.5 ln 2 + 0.5 ln 2) = ln(2)/4
  const double expected = std::log(2.0) / 4.0;
  const double got = mean_kl(Tensor::row({0.5, 0.5, 0, 0}),
                             Tensor::row({0.25, 0.25, 0.25, 0.25}));
  CHECK(got == doctest::Approx(0.1732868).epsilon(1e-6));
  CHECK(got == doctest::Approx(expected).epsilon(1e-14));

  Rng rng(505);
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t n = 2 + rng.index(5);
    Tensor a = softmax(random_tensor(rng, {n}, -2, 2));
    Tensor b = softmax(random_tensor(rng, {n}, -2, 2));
    CHECK(mean_kl(a, b) >= 0.0);
  }
}

TEST_CASE("mean_kl: negative entries raise domain error") {
  CHECK_THROWS_AS(mean_kl(Tensor::row({-0.5, 1.5}), Tensor::row({0.5, 0.5})),
                  DomainError);
  CHECK_THROWS_AS(mean_kl(Tensor::row({0.5, 0.5}), Tensor::row({-0.1, 1.1})),
                  DomainError);
}

TEST_CASE("mean_kl: gradient w.r.t. prediction matches finite differences") {
  Rng rng(606);
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t n = 4;
    ParamStore ps(0);
    ps.insert("logits", random_tensor(rng, {n}, -1.5, 1.5));
    Tensor target = softmax(random_tensor(rng, {n}, -1, 1));
    auto fn = [&target](Tape& t, const ParamStore& p) {
      return t.mean_kl(t.softmax(t.param(p, "logits")), target);
    };
    CHECK(grad_check(fn, ps) < kOpTol);
  }
}

TEST_CASE("cross_entropy: perfect prediction, closed form, errors") {
  CHECK(cross_entropy(Tensor::row({0, 1, 0}), Tensor::row({0, 1, 0})) ==
        doctest::Approx(0.0));
  CHECK(cross_entropy(Tensor::row({0.1, 0.8, 0.1}), Tensor::row({0, 1, 0})) ==
        doctest::Approx(0.2231436).epsilon(1e-6));
  CHECK_THROWS_AS(cross_entropy(Tensor::row({0.5, 0.5}), Tensor::row({0.5, 0.5})),
                  LabelError);
  CHECK_THROWS_AS(cross_entropy(Tensor::row({0.5, 0.5}), Tensor::row({1, 1})),
                  LabelError);
}

TEST_CASE("cross_entropy: gradient w.r.t. logits equals softmax minus one-hot") {
  Rng rng(707);
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t m = 3 + rng.index(3);
    Tensor logits = random_tensor(rng, {m}, -2, 2);
    Tensor one_hot({m});
    one_hot[rng.index(m)] = 1.0;

    Tape tape;
    auto v = tape.input(logits);
    auto y = tape.softmax(v);
    auto loss = tape.cross_entropy(y, one_hot);
    tape.backward(loss);
    Tensor expected = softmax(logits);
    for (std::size_t j = 0; j < m; ++j) {
      CHECK(tape.grad(v)[j] ==
            doctest::Approx(expected[j] - one_hot[j]).epsilon(1e-10));
    }
  }

  ParamStore ps(0);
  ps.insert("logits", random_tensor(rng, {4}, -1, 1));
  Tensor one_hot({4});
  one_hot[2] = 1.0;
  auto fn = [&one_hot](Tape& t, const ParamStore& p) {
    return t.cross_entropy(t.softmax(t.param(p, "logits")), one_hot);
  };
  CHECK(grad_check(fn, ps) < kOpTol);
}

TEST_CASE("mse: zero on equal inputs, closed form, gradient") {
  CHECK(mse(Tensor::row({1, 2, 3}), Tensor::row({1, 2, 3})) == 0.0);
  CHECK(mse(Tensor::row({1, 0}), Tensor::row({0, 0})) == doctest::Approx(0.5));
  CHECK_THROWS_AS(mse(Tensor::row({1, 0}), Tensor::row({0, 0, 0})), DimensionError);

  Rng rng(808);
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t n = 2 + rng.index(4);
    Tensor target = random_tensor(rng, {n});
    ParamStore ps(0);
    ps.insert("p", random_tensor(rng, {n}));

    // Analytic gradient is 2 (p - target) / n.
    Tape tape;
    auto p = tape.param(ps, "p");
    auto loss = tape.mse(p, target);
    tape.backward(loss);
    for (std::size_t i = 0; i < n; ++i) {
      const double expected = 2.0 * (ps.at("p")[i] - target[i]) / static_cast<double>(n);
      CHECK(tape.grad(p)[i] == doctest::Approx(expected).epsilon(1e-12));
    }

    auto fn = [&target](Tape& t, const ParamStore& s) {
      return t.mse(t.param(s, "p"), target);
    };
    CHECK(grad_check(fn, ps) < kOpTol);
  }
}

TEST_CASE("adamw: bias-corrected first step") {
  ParamStore ps(0);
  ps.insert("theta", Tensor::row({0}));
  GradientMap grads;
  grads.emplace("theta", Tensor::row({1}));

  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  AdamWState opt(cfg);
  opt.step(ps, grads);

  const double theta = ps.at("theta")[0];
  CHECK(theta == doctest::Approx(-0.001).epsilon(1e-7));
  CHECK(theta > -0.001);  // epsilon in the denominator shrinks the step
  CHECK(opt.step_count() == 1);
}

TEST_CASE("adamw: zero gradient leaves parameters unchanged without decay") {
  ParamStore ps(0);
  ps.insert("theta", Tensor::row({0.3, -0.7}));
  GradientMap grads;
  grads.emplace("theta", Tensor({2}));

  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  AdamWState opt(cfg);
  opt.step(ps, grads);
  CHECK(ps.at("theta")[0] == 0.3);
  CHECK(ps.at("theta")[1] == -0.7);
}

TEST_CASE("adamw: decoupled decay term only") {
  ParamStore ps(0);
  ps.insert("theta", Tensor::row({1.0}));
  GradientMap grads;
  grads.emplace("theta", Tensor({1}));

  AdamWConfig cfg;
  cfg.weight_decay = 0.01;
  AdamWState opt(cfg);
  opt.step(ps, grads);
  CHECK(ps.at("theta")[0] == doctest::Approx(0.99999).epsilon(1e-12));
}

TEST_CASE("adamw: deterministic, bit-identical across runs") {
  Rng rng(909);
  Tensor init = random_tensor(rng, {8});
  Tensor g1 = random_tensor(rng, {8});
  Tensor g2 = random_tensor(rng, {8});

  auto run = [&]() {
    ParamStore ps(0);
    ps.insert("theta", init);
    AdamWState opt;
    GradientMap grads;
    grads.emplace("theta", g1);
    opt.step(ps, grads);
    grads.at("theta") = g2;
    opt.step(ps, grads);
    return ps.at("theta");
  };

  Tensor a = run();
  Tensor b = run();
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("adamw: non-finite gradient aborts the step") {
  ParamStore ps(0);
  ps.insert("theta", Tensor::row({1.0}));
  GradientMap grads;
  Tensor g({1});
  g[0] = std::numeric_limits<double>::quiet_NaN();
  grads.emplace("theta", g);

  AdamWState opt;
  CHECK_THROWS_AS(opt.step(ps, grads), NumericError);
  CHECK(opt.step_count() == 0);
  CHECK(ps.at("theta")[0] == 1.0);
}

TEST_CASE("param store: same seed reproduces values bit-for-bit") {
  auto build = [](std::uint64_t seed) {
    ParamStore ps(seed);
    ps.add_uniform("a", {4, 4}, 4);
    ps.add_uniform("b", {16}, 16);
    ps.add_constant("c", {3}, 1.0);
    return ps;
  };
  ParamStore a = build(42), b = build(42), c = build(43);
  for (const auto& name : a.names()) {
    CHECK(std::memcmp(a.at(name).data(), b.at(name).data(),
                      a.at(name).size() * sizeof(double)) == 0);
  }
  bool any_diff = false;
  for (std::size_t i = 0; i < a.at("a").size(); ++i) {
    if (a.at("a")[i] != c.at("a")[i]) any_diff = true;
  }
  CHECK(any_diff);
  CHECK_THROWS_AS(a.insert("a", Tensor({1})), ConfigError);
}

TEST_CASE("grad_check: sum of parameters has unit gradient") {
  Rng rng(111);
  ParamStore ps(0);
  ps.insert("a", random_tensor(rng, {3, 2}));
  ps.insert("b", random_tensor(rng, {4}));
  auto fn = [](Tape& t, const ParamStore& p) {
    return t.scale_add(t.sum(t.param(p, "a")), 1.0, t.sum(t.param(p, "b")), 1.0);
  };
  CHECK(grad_check(fn, ps) < 1e-9);
}

TEST_CASE("tape: softmax node output sums to one for random inputs") {
  Rng rng(112);
  for (int trial = 0; trial < kTrials; ++trial) {
    Tape tape;
    auto v = tape.input(random_tensor(rng, {3 + rng.index(4)}, -50, 50));
    auto p = tape.softmax(v);
    double sum = 0.0;
    for (double x : tape.value(p).values()) sum += x;
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}
