// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#include <doctest.h>

#include <cmath>

#include "asl/nn.hpp"
#include "grad_check.hpp"

using namespace asl;
using test::grad_check;
using test::random_tensor;
using test::random_tensor_away_from_zero;
using VarD = nn::VarT<double>;

TEST_CASE("conv2d with an identity kernel is the identity") {
  Rng rng(7);
  TensorD x = random_tensor({1, 1, 4, 5}, &rng);
  auto vx = nn::constant(TensorD(x));
  auto w = nn::constant(TensorD({1, 1, 1, 1}, {1.0}));
  auto b = nn::constant(TensorD({1}));
  auto y = nn::conv2d(vx, w, b, 1, 0);
  REQUIRE(y->value.dims() == x.dims());
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(y->value[i] == x[i]);
}

TEST_CASE("conv2d output extent follows floor((in+2p-k)/s)+1") {
  Rng rng(3);
  TensorD x = random_tensor({1, 2, 11, 9}, &rng);
  auto y = nn::conv2d(nn::constant(TensorD(x)),
                      nn::constant(random_tensor({4, 2, 3, 3}, &rng)),
                      nn::constant(TensorD({4})), 2, 1);
  CHECK(y->value.dims() == std::vector<int>{1, 4, 6, 5});
}

TEST_CASE("maxpool2d 2x2 over [[1,2],[3,4]] gives [[4]]") {
  TensorD x({1, 1, 2, 2}, {1, 2, 3, 4});
  auto y = nn::maxpool2d(nn::constant(std::move(x)), 2, 2, 0);
  REQUIRE(y->value.numel() == 1);
  CHECK(y->value[0] == 4.0);
}

TEST_CASE("relu clamps negatives and is elementwise nonnegative") {
  Rng rng(11);
  TensorD x = random_tensor({1, 3, 4, 4}, &rng);
  auto y = nn::relu(nn::constant(TensorD(x)));
  for (int64_t i = 0; i < x.numel(); ++i) {
    CHECK(y->value[i] >= 0.0);
    CHECK(y->value[i] == (x[i] > 0 ? x[i] : 0.0));
  }
}

TEST_CASE("fc weight gradient is grad_out times x transpose, exactly") {
  // y = Wx with loss = sum(g .* y): dL/dW = g x^T.
  TensorD x({1, 3}, {0.5, -1.25, 2.0});
  TensorD w({2, 3}, {1, 2, 3, 4, 5, 6});
  auto vx = nn::constant(TensorD(x));
  auto vw = nn::parameter("w", TensorD(w));
  auto y = nn::fc(vx, vw, nn::constant(TensorD({2})));
  // Project with fixed weights g = (2, -3).
  auto g = nn::constant(TensorD({1, 2}, {2, -3}));
  auto loss = nn::fc(y, g, nn::constant(TensorD({1})));
  nn::backward(loss);
  const double gvals[2] = {2, -3};
  for (int o = 0; o < 2; ++o)
    for (int i = 0; i < 3; ++i)
      CHECK(vw->grad.at2(o, i) == doctest::Approx(gvals[o] * x[i]).epsilon(0));
}

TEST_CASE("64-bit finite differences: conv2d, fc, pool, resize, softmax") {
  Rng rng(1234);
  SUBCASE("conv2d stride 1") {
    auto err = grad_check(
        [](const std::vector<VarD>& in) {
          return nn::conv2d(in[0], in[1], in[2], 1, 1);
        },
        {random_tensor({2, 2, 5, 6}, &rng), random_tensor({3, 2, 3, 3}, &rng),
         random_tensor({3}, &rng)},
        99);
    CHECK(err < 1e-6);
  }
  SUBCASE("conv2d stride 2") {
    auto err = grad_check(
        [](const std::vector<VarD>& in) {
          return nn::conv2d(in[0], in[1], in[2], 2, 1);
        },
        {random_tensor({1, 3, 7, 9}, &rng), random_tensor({2, 3, 3, 3}, &rng),
         random_tensor({2}, &rng)},
        100);
    CHECK(err < 1e-6);
  }
  SUBCASE("fc") {
    auto err = grad_check(
        [](const std::vector<VarD>& in) { return nn::fc(in[0], in[1], in[2]); },
        {random_tensor({3, 6}, &rng), random_tensor({4, 6}, &rng),
         random_tensor({4}, &rng)},
        101);
    CHECK(err < 1e-6);
  }
  SUBCASE("maxpool2d") {
    auto err = grad_check(
        [](const std::vector<VarD>& in) {
          return nn::maxpool2d(in[0], 2, 2, 0);
        },
        {random_tensor({1, 2, 6, 6}, &rng)}, 102);
    CHECK(err < 1e-6);
  }
  SUBCASE("relu") {
    auto err = grad_check(
        [](const std::vector<VarD>& in) { return nn::relu(in[0]); },
        {random_tensor_away_from_zero({2, 3, 4, 4}, &rng)}, 103);
    CHECK(err < 1e-6);
  }
  SUBCASE("bilinear resize up and down") {
    auto err_up = grad_check(
        [](const std::vector<VarD>& in) {
          return nn::resize_bilinear(in[0], 7, 9);
        },
        {random_tensor({1, 2, 4, 5}, &rng)}, 104);
    CHECK(err_up < 1e-6);
    auto err_down = grad_check(
        [](const std::vector<VarD>& in) {
          return nn::resize_bilinear(in[0], 3, 2);
        },
        {random_tensor({1, 2, 6, 7}, &rng)}, 105);
    CHECK(err_down < 1e-6);
  }
  SUBCASE("sample_rect") {
    kern::RectMap m{0.4, 0.63, -0.2, 0.85};
    auto err = grad_check(
        [m](const std::vector<VarD>& in) {
          return nn::sample_rect(in[0], m, 5, 6);
        },
        {random_tensor({1, 1, 6, 7}, &rng)}, 106);
    CHECK(err < 1e-6);
  }
  SUBCASE("softmax over planes") {
    auto err = grad_check(
        [](const std::vector<VarD>& in) { return nn::softmax_planes(in[0]); },
        {random_tensor({1, 2, 3, 4}, &rng)}, 107);
    CHECK(err < 1e-6);
  }
  SUBCASE("concat and take_plane") {
    auto err = grad_check(
        [](const std::vector<VarD>& in) {
          return nn::take_plane(nn::concat_planes(in[0], in[1]), 2);
        },
        {random_tensor({2, 2, 3, 3}, &rng), random_tensor({2, 2, 3, 3}, &rng)},
        108);
    CHECK(err < 1e-6);
  }
  SUBCASE("softmax cross entropy") {
    TensorD target({2, 2, 3, 3});
    for (int n = 0; n < 2; ++n)
      for (int i = 0; i < 9; ++i) {
        const int hot = (n + i) % 2;
        target[(int64_t(n) * 2 + hot) * 9 + i] = 1.0;
      }
    auto err = grad_check(
        [target](const std::vector<VarD>& in) {
          return nn::softmax_cross_entropy(in[0], target);
        },
        {random_tensor({2, 2, 3, 3}, &rng)}, 109);
    CHECK(err < 1e-6);
  }
}

TEST_CASE("cross entropy at uniform logits is ln 2 and with a huge margin ~0") {
  TensorD logits({1, 2, 2, 2});
  TensorD target({1, 2, 2, 2});
  for (int i = 0; i < 4; ++i) target[i] = 1.0;  // plane 0 hot everywhere
  auto loss =
      nn::softmax_cross_entropy(nn::constant(TensorD(logits)), target);
  CHECK(loss->value[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  for (int i = 0; i < 4; ++i) logits[i] = 50.0;  // big margin on the hot plane
  auto loss2 =
      nn::softmax_cross_entropy(nn::constant(TensorD(logits)), target);
  CHECK(loss2->value[0] < 1e-12);
}

TEST_CASE("cross entropy matches a direct per-cell summation oracle") {
  Rng rng(55);
  TensorD logits = random_tensor({2, 2, 4, 5}, &rng, -3, 3);
  TensorD target({2, 2, 4, 5});
  std::vector<int> hot(size_t(2 * 20));
  for (int n = 0; n < 2; ++n)
    for (int i = 0; i < 20; ++i) {
      const int h = rng.uniform() < 0.5 ? 0 : 1;
      hot[size_t(n * 20 + i)] = h;
      target[(int64_t(n) * 2 + h) * 20 + i] = 1.0;
    }
  auto loss =
      nn::softmax_cross_entropy(nn::constant(TensorD(logits)), target);
  double oracle = 0;
  for (int n = 0; n < 2; ++n)
    for (int i = 0; i < 20; ++i) {
      const double a = logits[(int64_t(n) * 2 + 0) * 20 + i];
      const double b = logits[(int64_t(n) * 2 + 1) * 20 + i];
      const double l = hot[size_t(n * 20 + i)] == 0 ? a : b;
      oracle += std::log(std::exp(a) + std::exp(b)) - l;
    }
  oracle /= 40.0;
  CHECK(loss->value[0] == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("cross entropy rejects targets that are not one-hot") {
  TensorD logits({1, 2, 1, 1});
  TensorD both({1, 2, 1, 1}, {1, 1});
  CHECK_THROWS_AS(
      nn::softmax_cross_entropy(nn::constant(TensorD(logits)), both),
      UsageError);
  TensorD none({1, 2, 1, 1}, {0, 0});
  CHECK_THROWS_AS(
      nn::softmax_cross_entropy(nn::constant(TensorD(logits)), none),
      UsageError);
  TensorD frac({1, 2, 1, 1}, {0.7, 0.3});
  CHECK_THROWS_AS(
      nn::softmax_cross_entropy(nn::constant(TensorD(logits)), frac),
      UsageError);
}

TEST_CASE("backward requires a scalar loss and accumulates until zeroed") {
  auto x = nn::parameter("x", TensorD({1, 2}, {1.0, 2.0}));
  auto y = nn::relu(x);
  CHECK_THROWS_AS(nn::backward(y), UsageError);

  auto w = nn::constant(TensorD({1, 2}, {1.0, 1.0}));
  auto loss = nn::fc(y, w, nn::constant(TensorD({1})));
  nn::backward(loss);
  CHECK(x->grad[0] == 1.0);
  auto loss2 = nn::fc(nn::relu(x), w, nn::constant(TensorD({1})));
  nn::backward(loss2);
  CHECK(x->grad[0] == 2.0);  // accumulated
  x->zero_grad();
  CHECK(x->grad[0] == 0.0);
}

TEST_CASE("adam: zero gradient leaves parameters untouched") {
  auto p = nn::parameter("p", Tensor({3}, {1.0f, -2.0f, 0.5f}));
  nn::Adam adam({p});
  p->ensure_grad();
  adam.step();
  CHECK(p->value[0] == 1.0f);
  CHECK(p->value[1] == -2.0f);
  CHECK(p->value[2] == 0.5f);
}

TEST_CASE("adam drives a scalar quadratic down monotonically") {
  auto p = nn::parameter("p", Tensor({1}, {1.0f}));
  nn::Adam::Options opt;
  opt.lr = 1e-3f;
  nn::Adam adam({p});
  double prev = double(p->value[0]) * p->value[0];
  for (int i = 0; i < 100; ++i) {
    p->ensure_grad();
    p->grad[0] = 2.0f * p->value[0];
    adam.step();
    p->zero_grad();
    const double f = double(p->value[0]) * p->value[0];
    CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("adam runs are bit-identical given the same start") {
  auto run = [] {
    auto p = nn::parameter(
        "p", nn::kaiming_uniform<float>({4, 4}, 4, 42, "p"));
    nn::Adam adam({p});
    Rng rng(9);
    for (int i = 0; i < 20; ++i) {
      p->ensure_grad();
      for (int64_t k = 0; k < p->grad.numel(); ++k)
        p->grad[k] = float(rng.uniform(-1, 1));
      adam.step();
      p->zero_grad();
    }
    return p->value;
  };
  const Tensor a = run();
  const Tensor b = run();
  for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("bilinear resize identity and constant preservation") {
  Rng rng(77);
  TensorD x = random_tensor({1, 2, 5, 6}, &rng);
  auto same = nn::resize_bilinear(nn::constant(TensorD(x)), 5, 6);
  for (int64_t i = 0; i < x.numel(); ++i)
    CHECK(same->value[i] == doctest::Approx(x[i]).epsilon(1e-12));

  TensorD c({1, 1, 3, 3});
  c.fill(0.625);
  auto up = nn::resize_bilinear(nn::constant(std::move(c)), 10, 14);
  for (int64_t i = 0; i < up->value.numel(); ++i)
    CHECK(up->value[i] == doctest::Approx(0.625).epsilon(1e-12));
}

TEST_CASE("parameter init is a pure function of seed and name") {
  const Tensor a = nn::kaiming_uniform<float>({8, 3, 3, 3}, 27, 5, "conv.w");
  const Tensor b = nn::kaiming_uniform<float>({8, 3, 3, 3}, 27, 5, "conv.w");
  const Tensor c = nn::kaiming_uniform<float>({8, 3, 3, 3}, 27, 6, "conv.w");
  for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
  bool any_diff = false;
  for (int64_t i = 0; i < a.numel(); ++i) any_diff |= (a[i] != c[i]);
  CHECK(any_diff);
  // Bound check: |w| <= sqrt(6/fan_in).
  const float bound = std::sqrt(6.0f / 27.0f);
  for (int64_t i = 0; i < a.numel(); ++i) CHECK(std::abs(a[i]) <= bound);
}
