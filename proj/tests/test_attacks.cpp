#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "fairtat/attacks.hpp"
#include "fairtat/model.hpp"
#include "fairtat/rng.hpp"

using namespace fairtat;

namespace {

// 2-class linear model with explicit weights; bias zero.
ModelParams linear_model(const std::vector<std::vector<double>>& rows) {
  ModelParams m;
  std::size_t k = rows.size(), d = rows[0].size();
  m.dims = {d, {}, k};
  ModelParams::Layer l;
  l.weight = Tensor({k, d});
  l.bias = Tensor({k});
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < d; ++j) l.weight.at(i, j) = rows[i][j];
  m.layers.push_back(std::move(l));
  return m;
}

double ce_loss(const ModelParams& m, const Tensor& x,
               const std::vector<int>& y) {
  Tape tape;
  Var logits = model_forward(tape, m, tape.leaf(x));
  int k = static_cast<int>(m.dims.num_classes);
  return tape.value(tape.mean(tape.softmax_cross_entropy(logits, y, k)))
      .values[0];
}

bool in_ball_and_range(const AdvBatch& adv, double eps, double lo, double hi) {
  for (std::size_t i = 0; i < adv.perturbed.size(); ++i) {
    double d = adv.perturbed.values[i] - adv.original.values[i];
    if (std::abs(d) > eps + 1e-15) return false;
    if (adv.perturbed.values[i] < lo || adv.perturbed.values[i] > hi)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("fgsm signs on a hand-computed 2-class linear model") {
  // logits = [w.x, -w.x] with w = [1, -1]; true class 0. dL/dx = (p0-1) w
  // pointwise, so the ascent direction sign(dL/dx) = sign(-w) = [-1, +1].
  ModelParams m = linear_model({{1.0, -1.0}, {-1.0, 1.0}});
  Tensor x({1, 2}, std::vector<double>{0.5, 0.5});
  AttackConfig cfg;
  cfg.epsilon = 0.1;
  AdvBatch adv = fgsm(m, x, {0}, cfg);
  CHECK(adv.perturbed.values[0] == doctest::Approx(0.4));
  CHECK(adv.perturbed.values[1] == doctest::Approx(0.6));
  // and it actually increased the true-class loss
  CHECK(ce_loss(m, adv.perturbed, {0}) > ce_loss(m, x, {0}));
}

TEST_CASE("pgd loss is non-decreasing per step on a linear model") {
  ModelParams m = linear_model({{2.0, 0.5}, {-1.0, 1.5}});
  Tensor x({3, 2}, std::vector<double>{0.2, 0.8, 0.5, 0.5, 0.9, 0.1});
  std::vector<int> y = {0, 1, 0};
  AttackConfig cfg;
  cfg.epsilon = 0.2;
  cfg.step_size = 0.02;
  cfg.random_start = false;
  double prev = ce_loss(m, x, y);
  for (std::size_t steps = 1; steps <= 10; ++steps) {
    cfg.num_steps = steps;
    AdvBatch adv = pgd_untargeted(m, x, y, cfg);
    double cur = ce_loss(m, adv.perturbed, y);
    CHECK(cur >= prev - 1e-12);
    prev = cur;
  }
}

TEST_CASE("pgd_targeted raises the target-class probability") {
  ModelParams m =
      linear_model({{1.0, 0.0}, {0.0, 1.0}, {-1.0, -1.0}});
  Tensor x({1, 2}, std::vector<double>{0.6, 0.4});
  AttackConfig cfg;
  cfg.epsilon = 0.15;
  cfg.num_steps = 10;
  cfg.step_size = 0.03;
  AdvBatch adv = pgd_targeted(m, x, {2}, cfg);
  REQUIRE(adv.targets.has_value());
  CHECK((*adv.targets)[0] == 2);

  auto target_prob = [&](const Tensor& input) {
    Tensor logits = model_logits(m, input);
    double mx = std::max({logits.values[0], logits.values[1], logits.values[2]});
    double z = 0.0;
    for (double l : logits.values) z += std::exp(l - mx);
    return std::exp(logits.values[2] - mx) / z;
  };
  CHECK(target_prob(adv.perturbed) >= target_prob(x));

  // eq4_literal flips the direction: target probability must not increase.
  cfg.eq4_literal = true;
  AdvBatch lit = pgd_targeted(m, x, {2}, cfg);
  CHECK(target_prob(lit.perturbed) <= target_prob(x) + 1e-12);
}

TEST_CASE("fgsm equals single-step pgd bitwise") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    ModelParams m = init_model({6, {10}, 3}, 100 + rep);
    Tensor x({4, 6});
    for (auto& v : x.values) v = rng.uniform(0.0, 1.0);
    std::vector<int> y = {0, 1, 2, 1};
    AttackConfig cfg;
    cfg.epsilon = rng.uniform(0.01, 0.2);
    cfg.num_steps = 1;
    cfg.step_size = cfg.epsilon;
    cfg.random_start = false;
    AdvBatch a = fgsm(m, x, y, cfg);
    AdvBatch b = pgd_untargeted(m, x, y, cfg);
    CHECK(std::memcmp(a.perturbed.values.data(), b.perturbed.values.data(),
                      a.perturbed.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("ball and range invariants over randomized triples") {
  Rng rng(17);
  for (int rep = 0; rep < 60; ++rep) {
    ModelDims dims{1 + rng.below(8), {1 + rng.below(16)},
                   2 + rng.below(4)};
    ModelParams m = init_model(dims, rng.below(1u << 30));
    std::size_t n = 1 + rng.below(6);
    Tensor x({n, dims.input_dim});
    for (auto& v : x.values) v = rng.uniform(0.0, 1.0);
    std::vector<int> y(n);
    for (auto& l : y) l = static_cast<int>(rng.below(dims.num_classes));

    AttackConfig cfg;
    cfg.epsilon = rng.uniform(0.0, 0.3);
    cfg.step_size = rng.uniform(0.005, 0.1);
    cfg.num_steps = 1 + rng.below(10);
    cfg.random_start = rep % 2 == 0;
    Rng attack_rng(rep);

    AdvBatch adv = pgd_untargeted(m, x, y, cfg, &attack_rng);
    CHECK(in_ball_and_range(adv, cfg.epsilon, 0.0, 1.0));

    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i)
      t[i] = (y[i] + 1) % static_cast<int>(dims.num_classes);
    adv = pgd_targeted(m, x, t, cfg, &attack_rng);
    CHECK(in_ball_and_range(adv, cfg.epsilon, 0.0, 1.0));
  }
}

TEST_CASE("per-sample epsilons are honored individually") {
  ModelParams m = init_model({3, {8}, 3}, 21);
  Tensor x({3, 3}, std::vector<double>{0.5, 0.5, 0.5, 0.4, 0.6, 0.5, 0.3, 0.7,
                                       0.5});
  std::vector<int> t = {1, 2, 0};
  std::vector<double> eps = {0.05, 0.15, 0.0};
  AttackConfig cfg;
  cfg.epsilon = 0.10;  // overridden
  cfg.num_steps = 8;
  cfg.step_size = 0.04;
  AdvBatch adv = pgd_targeted(m, x, t, cfg, nullptr, &eps);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(std::abs(adv.perturbed.at(i, j) - adv.original.at(i, j)) <=
            eps[i] + 1e-15);
  // eps = 0 row is untouched
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(adv.perturbed.at(2, j) == adv.original.at(2, j));
}

TEST_CASE("attacks never mutate model or input (purity)") {
  ModelParams m = init_model({4, {8}, 3}, 33);
  std::uint64_t before = m.checksum();
  Rng rng(2);
  Tensor x({5, 4});
  for (auto& v : x.values) v = rng.uniform(0.0, 1.0);
  Tensor x_copy = x;
  AttackConfig cfg;
  cfg.num_steps = 5;
  Rng attack_rng(9);
  cfg.random_start = true;
  pgd_untargeted(m, x, {0, 1, 2, 0, 1}, cfg, &attack_rng);
  CHECK(m.checksum() == before);
  CHECK(x.values == x_copy.values);
}

TEST_CASE("project_linf closed form and idempotence") {
  Tensor center({1, 3}, std::vector<double>{0.5, 0.1, 0.9});
  Tensor cand({1, 3}, std::vector<double>{0.95, -0.5, 1.5});
  Tensor p = project_linf(cand, center, 0.2, 0.0, 1.0);
  CHECK(p.values[0] == doctest::Approx(0.7));
  CHECK(p.values[1] == doctest::Approx(0.0));
  CHECK(p.values[2] == doctest::Approx(1.0));
  Tensor p2 = project_linf(p, center, 0.2, 0.0, 1.0);
  CHECK(p.values == p2.values);
}

TEST_CASE("config validation") {
  AttackConfig cfg;
  cfg.epsilon = -0.1;
  CHECK_THROWS(cfg.validate());
  cfg.epsilon = 2.0;  // bigger than the [0,1] range
  CHECK_THROWS(cfg.validate());
  cfg = AttackConfig{};
  cfg.num_steps = 0;
  CHECK_THROWS(cfg.validate());
  CHECK_NOTHROW(AttackConfig{}.validate());
}
