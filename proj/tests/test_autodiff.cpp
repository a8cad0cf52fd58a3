#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "smrt/adam.hpp"
#include "smrt/gradcheck.hpp"
#include "smrt/ops.hpp"
#include "smrt/tensor.hpp"

using namespace smrt;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> vals(static_cast<size_t>(shape_numel(shape)));
  for (double& v : vals) v = u(rng);
  return Tensor::from_values(std::move(shape), std::move(vals));
}

}  // namespace

TEST_CASE("every primitive op matches central finite differences") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 3);
    const int k = 2 + static_cast<int>(rng() % 3);
    const int n = 2 + static_cast<int>(rng() % 3);

    INFO("trial " << trial);
    {
      Tensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
      REQUIRE(grad_check([&] { return sum(matmul(a, b)); }, {a, b}) < 1e-5);
    }
    {
      Tensor a = random_tensor({m, n}, rng);
      REQUIRE(grad_check([&] { return sum(transpose(a)); }, {a}) < 1e-5);
      REQUIRE(grad_check([&] { return mean(mul(transpose(a), transpose(a))); }, {a}) < 1e-5);
    }
    {
      Tensor a = random_tensor({m, n}, rng), b = random_tensor({m, n}, rng);
      Tensor bias = random_tensor({n}, rng);
      REQUIRE(grad_check([&] { return sum(mul(add(a, b), b)); }, {a, b}) < 1e-5);
      REQUIRE(grad_check([&] { return sum(mul(add_bias(a, bias), a)); }, {a, bias}) < 1e-5);
      REQUIRE(grad_check([&] { return mean(scale(a, -1.7)); }, {a}) < 1e-5);
    }
    {
      // Keep values away from the relu kink so finite differences are valid.
      Tensor a = random_tensor({m, n}, rng);
      for (double& v : a.values())
        if (std::fabs(v) < 1e-3) v = 0.5;
      REQUIRE(grad_check([&] { return sum(mul(relu(a), a)); }, {a}) < 1e-5);
    }
    {
      Tensor a = random_tensor({m, n}, rng);
      Tensor w = random_tensor({m, n}, rng);
      REQUIRE(grad_check([&] { return sum(mul(softmax_rows(a), w)); }, {a}) < 1e-5);
      REQUIRE(grad_check([&] { return sum(mul(log_softmax_rows(a), w)); }, {a}) < 1e-5);
    }
    {
      Tensor a = random_tensor({m, n}, rng);
      Tensor gain = random_tensor({n}, rng, 0.5, 1.5);
      Tensor bias = random_tensor({n}, rng);
      REQUIRE(grad_check([&] { return sum(mul(layer_norm(a, gain, bias), a)); },
                         {a, gain, bias}) < 1e-5);
    }
    {
      Tensor table = random_tensor({6, n}, rng);
      std::vector<int> ids = {0, 3, 3, 5};
      REQUIRE(grad_check([&] { return mean(embedding_lookup(table, ids)); }, {table}) < 1e-5);
    }
    {
      Tensor a = random_tensor({m, n}, rng), b = random_tensor({m, k}, rng);
      REQUIRE(grad_check([&] { return sum(mul(concat_cols({a, b}), concat_cols({a, b}))); },
                         {a, b}) < 1e-5);
      REQUIRE(grad_check([&] { return sum(slice_cols(a, 1, n - 1)); }, {a}) < 1e-5);
    }
  }
}

TEST_CASE("dropout gradient respects the sampled mask") {
  std::mt19937_64 rng(7);
  Tensor a = random_tensor({4, 5}, rng);
  // Re-seed per evaluation so the finite-difference re-runs see the same mask.
  auto loss = [&] {
    std::mt19937_64 mask_rng(99);
    return sum(mul(dropout(a, 0.4, mask_rng), a));
  };
  REQUIRE(grad_check(loss, {a}) < 1e-5);

  std::mt19937_64 mask_rng(99);
  Tensor d = dropout(a, 0.4, mask_rng);
  int kept = 0;
  for (size_t i = 0; i < d.values().size(); ++i) {
    if (d.values()[i] == 0.0) continue;
    ++kept;
    // Inverted scaling: kept units are multiplied by 1/(1-rate).
    REQUIRE(d.values()[i] == Catch::Approx(a.values()[i] / 0.6).epsilon(1e-12));
  }
  REQUIRE(kept > 0);
  REQUIRE(kept < 20);
}

TEST_CASE("softmax stays finite and normalized under extreme logits") {
  Tensor a = Tensor::from_values({2, 3}, {1e4, -1e4, 0.0, -1e4, -1e4, -1e4});
  Tensor p = softmax_rows(a);
  Tensor lp = log_softmax_rows(a);
  for (double v : p.values()) REQUIRE(std::isfinite(v));
  for (double v : lp.values()) REQUIRE(std::isfinite(v));
  REQUIRE(p.values()[0] == Catch::Approx(1.0));
  for (int i = 0; i < 2; ++i) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s += p.values()[i * 3 + j];
    REQUIRE(s == Catch::Approx(1.0).epsilon(1e-12));
  }
  // Uniform row: each log-prob is exactly -log 3.
  for (int j = 0; j < 3; ++j)
    REQUIRE(lp.values()[3 + j] == Catch::Approx(-std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("gradients accumulate across repeated backward calls") {
  Tensor a = Tensor::from_values({2}, {3.0, -1.0});
  backward(sum(mul(a, a)));
  backward(sum(mul(a, a)));
  // d/da sum(a^2) = 2a, applied twice.
  REQUIRE(a.grad()[0] == Catch::Approx(12.0));
  REQUIRE(a.grad()[1] == Catch::Approx(-4.0));
  a.zero_grad();
  REQUIRE(a.grad()[0] == 0.0);
}

TEST_CASE("backward rejects non-scalar losses") {
  Tensor a = Tensor::from_values({2}, {1.0, 2.0});
  REQUIRE_THROWS_AS(backward(a), std::invalid_argument);
}

TEST_CASE("shape errors name the op") {
  Tensor a = Tensor::from_values({2, 3}, std::vector<double>(6, 1.0));
  Tensor b = Tensor::from_values({2, 3}, std::vector<double>(6, 1.0));
  REQUIRE_THROWS_WITH(matmul(a, b), Catch::Matchers::ContainsSubstring("matmul"));
  REQUIRE_THROWS_WITH(slice_cols(a, 2, 5), Catch::Matchers::ContainsSubstring("slice_cols"));
  REQUIRE_THROWS_WITH(embedding_lookup(a, {4}),
                      Catch::Matchers::ContainsSubstring("embedding_lookup"));
}

TEST_CASE("adam first step matches the closed form") {
  // With fresh moments, mhat = g and vhat = g^2 regardless of betas, so the
  // first update is -lr * (sign(g) / (1 + eps/|g|) + wd * w) ~= -lr * sign(g).
  AdamConfig cfg;
  cfg.peak_lr = 0.5;
  cfg.warmup_updates = 1;  // lr_at(1) == peak
  cfg.warmup_init_lr = 0.5;
  cfg.weight_decay = 0.0;
  cfg.eps = 1e-8;
  AdamOptimizer opt(cfg);
  std::vector<NamedParam> params{{"w", Tensor::from_values({3}, {1.0, -2.0, 0.5})}};
  params[0].value.grad() = {0.3, -0.7, 2.0};
  opt.step(params);
  for (int i = 0; i < 3; ++i) {
    const double g = std::vector<double>{0.3, -0.7, 2.0}[i];
    const double expected =
        std::vector<double>{1.0, -2.0, 0.5}[i] - 0.5 * g / (std::fabs(g) + 1e-8);
    REQUIRE(params[0].value.values()[i] == Catch::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("decoupled weight decay shrinks parameters even with zero gradient") {
  AdamConfig cfg;
  cfg.peak_lr = 0.1;
  cfg.warmup_updates = 1;
  cfg.warmup_init_lr = 0.1;
  cfg.weight_decay = 0.5;
  AdamOptimizer opt(cfg);
  std::vector<NamedParam> params{{"w", Tensor::from_values({1}, {2.0})}};
  params[0].value.grad() = {0.0};
  opt.step(params);
  REQUIRE(params[0].value.values()[0] == Catch::Approx(2.0 - 0.1 * 0.5 * 2.0).epsilon(1e-12));
}

TEST_CASE("inverse-sqrt schedule: linear warmup, then decay, floored at min_lr") {
  AdamConfig cfg;  // peak 1e-3, warmup 4000, init 1e-7, min 1e-9
  AdamOptimizer opt(cfg);
  REQUIRE(opt.lr_at(0) == Catch::Approx(1e-7));
  REQUIRE(opt.lr_at(4000) == Catch::Approx(1e-3));
  REQUIRE(opt.lr_at(2000) == Catch::Approx(1e-7 + (1e-3 - 1e-7) * 0.5).epsilon(1e-12));
  REQUIRE(opt.lr_at(16000) == Catch::Approx(1e-3 * 0.5).epsilon(1e-12));
  for (std::int64_t t = 1; t < 4000; ++t) REQUIRE(opt.lr_at(t) < opt.lr_at(t + 1));
  for (std::int64_t t = 4000; t < 8000; ++t) REQUIRE(opt.lr_at(t) > opt.lr_at(t + 1));
  // Deep into decay the floor takes over: sqrt decay alone would give
  // 1e-3 * sqrt(4000 / 1e16) < 1e-9.
  REQUIRE(opt.lr_at(10'000'000'000'000'000LL) == Catch::Approx(1e-9));
}

TEST_CASE("gradient norm clipping rescales the whole update") {
  AdamConfig cfg;
  cfg.peak_lr = 1.0;
  cfg.warmup_updates = 1;
  cfg.warmup_init_lr = 1.0;
  cfg.weight_decay = 0.0;
  cfg.clip_norm = 1.0;
  AdamOptimizer clipped(cfg);
  std::vector<NamedParam> a{{"w", Tensor::from_values({2}, {0.0, 0.0})}};
  a[0].value.grad() = {3.0, 4.0};  // norm 5, scale 1/5
  clipped.step(a);

  AdamConfig cfg2 = cfg;
  cfg2.clip_norm = 0.0;
  AdamOptimizer plain(cfg2);
  std::vector<NamedParam> b{{"w", Tensor::from_values({2}, {0.0, 0.0})}};
  b[0].value.grad() = {3.0 / 5.0, 4.0 / 5.0};
  plain.step(b);
  REQUIRE(a[0].value.values()[0] == Catch::Approx(b[0].value.values()[0]).epsilon(1e-12));
  REQUIRE(a[0].value.values()[1] == Catch::Approx(b[0].value.values()[1]).epsilon(1e-12));
}

TEST_CASE("adam rejects non-finite gradients, naming the parameter") {
  AdamOptimizer opt;
  std::vector<NamedParam> params{{"enc0.ffn.w1", Tensor::from_values({1}, {1.0})}};
  params[0].value.grad() = {std::numeric_limits<double>::quiet_NaN()};
  REQUIRE_THROWS_WITH(opt.step(params), Catch::Matchers::ContainsSubstring("enc0.ffn.w1"));
}
