#include <doctest.h>

#include <cmath>
#include <vector>

#include "rewardforge/numerics.hpp"
#include "rewardforge/objective.hpp"
#include "rewardforge/rng.hpp"

using namespace rewardforge;
namespace obj = rewardforge::objective;
using reward::RewardConfig;

namespace {

std::vector<double> random_logits(RngState& rng, int v, double lo = -8.0,
                                  double hi = 8.0) {
  std::vector<double> z(static_cast<size_t>(v));
  for (double& x : z) x = lo + (hi - lo) * rng.next_double();
  return z;
}

// Central finite differences of the surrogate with weights frozen at z.
std::vector<double> fd_gradient(const std::vector<double>& z,
                                std::int32_t target, const RewardConfig& cfg,
                                double h = 1e-6) {
  const std::vector<double> weights = obj::frozen_weights(z, target, cfg);
  std::vector<double> grad(z.size());
  for (size_t j = 0; j < z.size(); ++j) {
    auto zp = z, zm = z;
    zp[j] += h;
    zm[j] -= h;
    grad[j] = (obj::surrogate_loss(zp, weights) -
               obj::surrogate_loss(zm, weights)) /
              (2.0 * h);
  }
  return grad;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

const std::vector<RewardConfig> kConfigGrid = {
    {0.0, 0.0, 0.0, 2},    {-0.25, 0.0, 0.0, 2}, {0.5, 0.0, 0.0, 2},
    {0.0, 0.0, -0.1, 2},   {0.0, 0.1, 0.0, 2},   {-0.25, 0.0, -0.1, 2},
    {-0.25, 0.1, 0.0, 2},  {0.5, 0.0, -0.1, 2},  {0.5, 0.1, 0.0, 2},
};

}  // namespace

TEST_CASE("cross-entropy gradient at uniform logits") {
  const auto out = obj::token_gradient(std::vector<double>{0.0, 0.0, 0.0}, 0,
                                       {0.0, 0.0, 0.0, 1});
  CHECK(out.dloss_dlogits[0] == doctest::Approx(-2.0 / 3.0).epsilon(1e-13));
  CHECK(out.dloss_dlogits[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(out.dloss_dlogits[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(out.diag.ce_nll == doctest::Approx(std::log(3.0)).epsilon(1e-13));
}

TEST_CASE("shaped gradient hand-evaluated examples") {
  // logits giving pi = [0.5, 0.3, 0.2]
  const std::vector<double> z{std::log(5.0), std::log(3.0), std::log(2.0)};

  // tail penalty only: r = [2, -0.1, -0.1], E[r] = 0.95
  const auto a = obj::token_gradient(z, 0, {0.0, 0.0, -0.1, 1});
  CHECK(std::abs(a.dloss_dlogits[0] - (-0.525)) < 1e-12);
  CHECK(std::abs(a.dloss_dlogits[1] - 0.315) < 1e-12);
  CHECK(std::abs(a.dloss_dlogits[2] - 0.210) < 1e-12);
  CHECK(a.diag.mean_reward == doctest::Approx(0.95).epsilon(1e-12));

  // head bonus: r = [2, 0.1, 0], E[r] = 1.03
  const auto b = obj::token_gradient(z, 0, {0.0, 0.1, 0.0, 2});
  CHECK(std::abs(b.dloss_dlogits[0] - (-0.485)) < 1e-12);
  CHECK(std::abs(b.dloss_dlogits[1] - 0.279) < 1e-12);
  CHECK(std::abs(b.dloss_dlogits[2] - 0.206) < 1e-12);
  CHECK(b.diag.mean_reward == doctest::Approx(1.03).epsilon(1e-12));
}

TEST_CASE("zero config equals the cross-entropy gradient to 1e-12") {
  RngState rng(21);
  for (int trial = 0; trial < 10000; ++trial) {
    const int v = 2 + static_cast<int>(rng.next_below(62));
    const auto z = random_logits(rng, v);
    const auto target = static_cast<std::int32_t>(
        rng.next_below(static_cast<std::uint64_t>(v)));
    const auto out = obj::token_gradient(z, target, {0.0, 0.0, 0.0, 2});
    const auto p = numerics::softmax(z);
    for (int j = 0; j < v; ++j) {
      const double want =
          p[static_cast<size_t>(j)] - (j == target ? 1.0 : 0.0);
      REQUIRE(std::abs(out.dloss_dlogits[static_cast<size_t>(j)] - want) <
              1e-12);
    }
  }
}

TEST_CASE("gradient rows sum to zero across the config grid") {
  RngState rng(22);
  for (int trial = 0; trial < 10000; ++trial) {
    const int v = 2 + static_cast<int>(rng.next_below(30));
    const auto z = random_logits(rng, v);
    const auto target = static_cast<std::int32_t>(
        rng.next_below(static_cast<std::uint64_t>(v)));
    const auto& cfg = kConfigGrid[static_cast<size_t>(trial) % kConfigGrid.size()];
    const auto out = obj::token_gradient(z, target, cfg);
    double sum = 0.0;
    for (double g : out.dloss_dlogits) sum += g;
    REQUIRE(std::abs(sum) < 1e-10);
  }
}

TEST_CASE("gradient is invariant under logit shifts") {
  RngState rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    const int v = 2 + static_cast<int>(rng.next_below(30));
    const auto z = random_logits(rng, v);
    const auto target = static_cast<std::int32_t>(
        rng.next_below(static_cast<std::uint64_t>(v)));
    const auto& cfg = kConfigGrid[static_cast<size_t>(trial) % kConfigGrid.size()];
    auto shifted = z;
    const double c = -10.0 + 20.0 * rng.next_double();
    for (double& x : shifted) x += c;
    const auto a = obj::token_gradient(z, target, cfg);
    const auto b = obj::token_gradient(shifted, target, cfg);
    for (int j = 0; j < v; ++j) {
      REQUIRE(std::abs(a.dloss_dlogits[static_cast<size_t>(j)] -
                       b.dloss_dlogits[static_cast<size_t>(j)]) < 1e-10);
    }
  }
}

TEST_CASE("surrogate loss reduces to the NLL under the zero config") {
  RngState rng(24);
  for (int trial = 0; trial < 200; ++trial) {
    const int v = 2 + static_cast<int>(rng.next_below(20));
    const auto z = random_logits(rng, v);
    const auto target = static_cast<std::int32_t>(
        rng.next_below(static_cast<std::uint64_t>(v)));
    const double loss = obj::surrogate_loss(z, target, {0.0, 0.0, 0.0, 2});
    const double nll = -numerics::log_softmax(z)[static_cast<size_t>(target)];
    CHECK(std::abs(loss - nll) < 1e-10);
  }
}

TEST_CASE("analytic gradient matches finite differences of the surrogate") {
  RngState rng(25);
  for (int trial = 0; trial < 1000; ++trial) {
    const int v = 2 + static_cast<int>(rng.next_below(14));
    const auto z = random_logits(rng, v, -4.0, 4.0);
    const auto target = static_cast<std::int32_t>(
        rng.next_below(static_cast<std::uint64_t>(v)));
    const auto& cfg = kConfigGrid[static_cast<size_t>(trial) % kConfigGrid.size()];
    const auto analytic = obj::token_gradient(z, target, cfg);
    const auto fd = fd_gradient(z, target, cfg);
    for (int j = 0; j < v; ++j) {
      REQUIRE(rel_err(analytic.dloss_dlogits[static_cast<size_t>(j)],
                      fd[static_cast<size_t>(j)]) < 1e-5);
    }
  }
}

TEST_CASE("surrogate gradient is shift invariant at the freeze point") {
  const std::vector<double> z{0.3, -1.2, 2.0, 0.7};
  const auto weights = obj::frozen_weights(z, 2, {-0.25, 0.1, 0.0, 2});
  auto shifted = z;
  for (double& x : shifted) x += 3.5;
  // gradients (by finite differences) agree under the shift
  for (size_t j = 0; j < z.size(); ++j) {
    const double h = 1e-6;
    auto zp = z, zm = z, sp = shifted, sm = shifted;
    zp[j] += h; zm[j] -= h; sp[j] += h; sm[j] -= h;
    const double g1 = (obj::surrogate_loss(zp, weights) -
                       obj::surrogate_loss(zm, weights)) / (2 * h);
    const double g2 = (obj::surrogate_loss(sp, weights) -
                       obj::surrogate_loss(sm, weights)) / (2 * h);
    CHECK(std::abs(g1 - g2) < 1e-9);
  }
}

TEST_CASE("exact expectation agrees with Monte Carlo score-function sampling") {
  const std::vector<double> z{0.8, -0.4, 0.1, -1.0};
  const std::int32_t target = 1;
  const RewardConfig cfg{-0.25, 0.1, -0.1, 2};
  const auto exact = obj::token_gradient(z, target, cfg);

  const auto p = numerics::softmax(z);
  const auto lp = numerics::log_softmax(z);
  const auto row = reward::shaped_rewards(p, target, cfg);

  // (1/N) sum r(a_i) grad log pi(a_i); grad_j log pi(a) = 1[a=j] - pi_j
  const int n = 1000000;
  RngState rng(31);
  std::vector<double> mc(z.size(), 0.0);
  std::vector<double> mc_sq(z.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto a = static_cast<size_t>(numerics::categorical_sample(p, rng));
    for (size_t j = 0; j < z.size(); ++j) {
      const double g = row.rewards[a] * ((a == j ? 1.0 : 0.0) - p[j]);
      mc[j] += g;
      mc_sq[j] += g * g;
    }
  }
  for (size_t j = 0; j < z.size(); ++j) {
    const double mean = mc[j] / n;
    const double var = mc_sq[j] / n - mean * mean;
    const double se = std::sqrt(var / n);
    const double ascent = -exact.dloss_dlogits[j];
    CHECK(std::abs(mean - ascent) < 3.0 * se + 1e-12);
  }
  (void)lp;
}

TEST_CASE("one ascent step from uniform orders entropy by beta") {
  const int v = 16;
  std::vector<double> uniform(v, 0.0);
  const double step = 0.5;
  const auto entropy_after = [&](double beta) {
    const auto out = obj::token_gradient(uniform, 3, {beta, 0.0, 0.0, 2});
    std::vector<double> z(uniform);
    for (int j = 0; j < v; ++j) {
      z[static_cast<size_t>(j)] -= step * out.dloss_dlogits[static_cast<size_t>(j)];
    }
    return numerics::entropy(numerics::softmax(z));
  };
  const double h_neg = entropy_after(-0.25);
  const double h_zero = entropy_after(0.0);
  const double h_pos = entropy_after(0.5);
  CHECK(h_neg < h_zero);
  CHECK(h_zero < h_pos);
}

TEST_CASE("batch objective equals the per-position mean") {
  RngState rng(26);
  const int v = 11;
  const int rows = 7;
  std::vector<double> logits;
  std::vector<std::int32_t> targets;
  std::vector<std::uint8_t> mask;
  for (int r = 0; r < rows; ++r) {
    const auto z = random_logits(rng, v);
    logits.insert(logits.end(), z.begin(), z.end());
    targets.push_back(static_cast<std::int32_t>(
        rng.next_below(static_cast<std::uint64_t>(v))));
    mask.push_back(r == 4 ? 0 : 1);
  }
  const RewardConfig cfg{-0.25, 0.1, 0.0, 3};
  const auto batch = obj::batch_objective(logits, v, targets, mask, cfg);

  int live = 0;
  std::vector<double> want(logits.size(), 0.0);
  double nll = 0.0;
  for (int r = 0; r < rows; ++r) {
    if (!mask[static_cast<size_t>(r)]) continue;
    ++live;
    const std::vector<double> z(
        logits.begin() + static_cast<size_t>(r) * v,
        logits.begin() + static_cast<size_t>(r + 1) * v);
    const auto out = obj::token_gradient(z, targets[static_cast<size_t>(r)], cfg);
    for (int j = 0; j < v; ++j) {
      want[static_cast<size_t>(r) * v + static_cast<size_t>(j)] =
          out.dloss_dlogits[static_cast<size_t>(j)];
    }
    nll += out.diag.ce_nll;
  }
  for (size_t i = 0; i < want.size(); ++i) {
    REQUIRE(std::abs(batch.dloss_dlogits[i] - want[i] / live) < 1e-12);
  }
  CHECK(batch.diag.ppl ==
        doctest::Approx(std::exp(nll / live)).epsilon(1e-12));
  CHECK(batch.diag.positions == live);
}

TEST_CASE("batch objective trivial cases and errors") {
  const std::vector<double> z{0.1, -0.2, 0.4};
  const RewardConfig cfg{0.0, 0.0, 0.0, 1};

  // single position: identical to token_gradient
  const auto single = obj::batch_objective(z, 3, std::vector<std::int32_t>{2},
                                           std::vector<std::uint8_t>{1}, cfg);
  const auto tok = obj::token_gradient(z, 2, cfg);
  for (int j = 0; j < 3; ++j) {
    CHECK(single.dloss_dlogits[static_cast<size_t>(j)] ==
          tok.dloss_dlogits[static_cast<size_t>(j)]);
  }

  // two identical positions: same gradient as one (per row)
  std::vector<double> two = z;
  two.insert(two.end(), z.begin(), z.end());
  const auto batch2 =
      obj::batch_objective(two, 3, std::vector<std::int32_t>{2, 2},
                           std::vector<std::uint8_t>{1, 1}, cfg);
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(batch2.dloss_dlogits[static_cast<size_t>(j)] -
                   tok.dloss_dlogits[static_cast<size_t>(j)] / 2.0) < 1e-15);
  }

  CHECK_THROWS_AS(
      obj::batch_objective(z, 3, std::vector<std::int32_t>{2},
                           std::vector<std::uint8_t>{0}, cfg),
      std::invalid_argument);
}

TEST_CASE("diagnostics carry the top-k mass split") {
  const std::vector<double> z{std::log(5.0), std::log(3.0), std::log(2.0)};
  const auto out = obj::token_gradient(z, 0, {0.0, 0.0, 0.0, 2});
  // pi = [0.5, 0.3, 0.2], K = {0, 1}; target 0
  CHECK(out.diag.mass_out_topk == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(out.diag.mass_topk_ex_target == doctest::Approx(0.3).epsilon(1e-12));
}
