#include <doctest.h>

#include <cmath>
#include <vector>

#include "rewardforge/numerics.hpp"
#include "rewardforge/reward.hpp"
#include "rewardforge/rng.hpp"

using namespace rewardforge;
namespace rw = rewardforge::reward;

namespace {

std::vector<double> random_dist(RngState& rng, int v) {
  std::vector<double> z(static_cast<size_t>(v));
  for (double& x : z) x = -6.0 + 12.0 * rng.next_double();
  return numerics::softmax(z);
}

// Direct two-indicator evaluation of the rank-aware negative rewards.
std::vector<double> neg_rewards_by_indicators(const std::vector<double>& dist,
                                              std::int32_t target,
                                              const rw::RewardConfig& cfg) {
  const auto topk = numerics::top_k_indices(dist, cfg.k);
  std::vector<double> out(dist.size(), 0.0);
  for (std::int32_t a = 0; a < static_cast<std::int32_t>(dist.size()); ++a) {
    const bool in_topk =
        std::find(topk.begin(), topk.end(), a) != topk.end();
    if (a != target && in_topk) out[static_cast<size_t>(a)] = cfg.lambda_top;
    if (a != target && !in_topk) out[static_cast<size_t>(a)] = cfg.lambda_tail;
  }
  return out;
}

}  // namespace

TEST_CASE("ce_reward inverse-probability values") {
  const auto row =
      rw::ce_reward(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 0);
  CHECK(row.rewards[0] == doctest::Approx(4.0).epsilon(1e-15));
  for (int i = 1; i < 4; ++i) CHECK(row.rewards[static_cast<size_t>(i)] == 0.0);

  std::vector<double> sure(3, 0.0);
  sure[1] = 1.0;
  CHECK(rw::ce_reward(sure, 1).rewards[1] == 1.0);

  const auto row2 = rw::ce_reward(std::vector<double>{0.5, 0.3, 0.2}, 1);
  CHECK(row2.rewards[1] == doctest::Approx(10.0 / 3.0).epsilon(1e-15));
  CHECK_FALSE(row2.clamped);
}

TEST_CASE("ce_reward clamps underflowed targets instead of diverging") {
  std::vector<double> p{1.0 - 1e-13, 1e-13};
  // keep it a valid distribution
  const auto row = rw::ce_reward(p, 1);
  CHECK(row.clamped);
  CHECK(std::isfinite(row.rewards[1]));
  CHECK(row.rewards[1] == doctest::Approx(1.0 / rw::kProbFloor));
}

TEST_CASE("pos_reward spot values") {
  // beta = 0 must return exactly 1/p, no exp/log round trip
  CHECK(rw::pos_reward(0.5, 0.0).value == 2.0);

  // 40-digit references: exp(0.25^0.5 ln(4/3)), exp(0.25^-0.25 ln(4/3))
  CHECK(std::abs(rw::pos_reward(0.75, 0.5).value - 1.1547005383792515) < 1e-12);
  CHECK(std::abs(rw::pos_reward(0.75, -0.25).value - 1.5020695970391722) <
        1e-12);
  // beta < 0 amplifies relative to the beta = 0 baseline 4/3
  CHECK(rw::pos_reward(0.75, -0.25).value > 4.0 / 3.0);
}

TEST_CASE("pos_reward limit and cap conventions") {
  for (double beta : {-1.5, -0.25, 0.0, 0.5, 2.0}) {
    CHECK(rw::pos_reward(1.0, beta).value == 1.0);
  }
  // beta <= -1 near p = 1 explodes; capped, flagged, never NaN
  const auto capped = rw::pos_reward(1.0 - 1e-9, -2.0);
  CHECK(capped.value <= rw::kRewardCap);
  CHECK(std::isfinite(capped.value));

  const auto tiny = rw::pos_reward(1e-15, -0.5);
  CHECK(tiny.clamped);
  CHECK(tiny.value == rw::kRewardCap);

  for (double beta : {-2.0, -0.25, 0.0, 0.5}) {
    for (double p : {1e-12, 1e-6, 0.1, 0.5, 0.999999, 1.0}) {
      const auto r = rw::pos_reward(p, beta);
      CHECK(std::isfinite(r.value));
      CHECK(r.value >= 1.0);  // ln(1/p) >= 0 and (1-p)^beta >= 0
    }
  }
}

TEST_CASE("pos_reward strictly decreasing in beta") {
  for (double p = 0.05; p < 0.96; p += 0.05) {
    double prev = std::numeric_limits<double>::infinity();
    for (double beta = -0.5; beta <= 1.0 + 1e-9; beta += 0.1) {
      const double v = rw::pos_reward(p, beta).value;
      CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("neg_rewards indicator example") {
  const std::vector<double> dist{0.5, 0.3, 0.15, 0.05};
  rw::RewardConfig cfg{0.0, 0.1, -0.1, 2};
  const auto row = rw::neg_rewards(dist, 0, cfg);
  CHECK(row.rewards == std::vector<double>{0.0, 0.1, -0.1, -0.1});

  rw::RewardConfig zero{0.0, 0.0, 0.0, 2};
  const auto zrow = rw::neg_rewards(dist, 0, zero);
  for (double v : zrow.rewards) CHECK(v == 0.0);
}

TEST_CASE("neg_rewards matches the brute-force indicator oracle") {
  RngState rng(11);
  for (int trial = 0; trial < 10000; ++trial) {
    const int v = 2 + static_cast<int>(rng.next_below(31));
    const auto dist = random_dist(rng, v);
    const auto target = static_cast<std::int32_t>(
        rng.next_below(static_cast<std::uint64_t>(v)));
    rw::RewardConfig cfg;
    cfg.k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(v)));
    cfg.lambda_top = -0.5 + rng.next_double();
    cfg.lambda_tail = -0.5 + rng.next_double();
    const auto got = rw::neg_rewards(dist, target, cfg);
    const auto want = neg_rewards_by_indicators(dist, target, cfg);
    REQUIRE(got.rewards.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i) {
      REQUIRE(got.rewards[i] == want[i]);  // indicator algebra, exact
    }
  }
}

TEST_CASE("neg_rewards lambda counts") {
  RngState rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const int v = 3 + static_cast<int>(rng.next_below(29));
    const auto dist = random_dist(rng, v);
    const auto target = static_cast<std::int32_t>(
        rng.next_below(static_cast<std::uint64_t>(v)));
    rw::RewardConfig cfg{0.0, 0.25, -0.25,
                         1 + static_cast<int>(rng.next_below(
                                 static_cast<std::uint64_t>(v)))};
    const auto row = rw::neg_rewards(dist, target, cfg);
    const auto topk = numerics::top_k_indices(dist, cfg.k);
    const bool target_in_topk =
        std::find(topk.begin(), topk.end(), target) != topk.end();
    int top_count = 0, tail_count = 0;
    for (size_t i = 0; i < row.rewards.size(); ++i) {
      if (static_cast<std::int32_t>(i) == target) continue;
      if (row.rewards[i] == cfg.lambda_top) ++top_count;
      else if (row.rewards[i] == cfg.lambda_tail) ++tail_count;
    }
    CHECK(top_count == cfg.k - (target_in_topk ? 1 : 0));
    CHECK(tail_count == v - 1 - top_count);
  }
}

TEST_CASE("shaped_rewards composes the two branches") {
  const std::vector<double> dist{0.5, 0.3, 0.2};
  const auto row = rw::shaped_rewards(dist, 0, {0.0, 0.1, 0.0, 2});
  CHECK(row.rewards[0] == 2.0);
  CHECK(row.rewards[1] == 0.1);
  CHECK(row.rewards[2] == 0.0);

  // exp((0.5)^-0.25 ln 2) with lambda_tail = -0.1, k = 1
  const auto amp = rw::shaped_rewards(dist, 0, {-0.25, 0.0, -0.1, 1});
  CHECK(std::abs(amp.rewards[0] - 2.2802738806995024) < 1e-12);
  CHECK(amp.rewards[1] == -0.1);
  CHECK(amp.rewards[2] == -0.1);
}

TEST_CASE("zero config recovers ce_reward bitwise") {
  RngState rng(13);
  for (int trial = 0; trial < 10000; ++trial) {
    const int v = 2 + static_cast<int>(rng.next_below(31));
    const auto dist = random_dist(rng, v);
    const auto target = static_cast<std::int32_t>(
        rng.next_below(static_cast<std::uint64_t>(v)));
    const int k =
        1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(v)));
    const auto shaped = rw::shaped_rewards(dist, target, {0.0, 0.0, 0.0, k});
    const auto ce = rw::ce_reward(dist, target);
    for (size_t i = 0; i < shaped.rewards.size(); ++i) {
      REQUIRE(shaped.rewards[i] == ce.rewards[i]);  // bitwise, incl. zeros
    }
    REQUIRE(shaped.clamped == ce.clamped);
  }
}

TEST_CASE("reward input validation") {
  const std::vector<double> dist{0.5, 0.5};
  CHECK_THROWS_AS(rw::ce_reward(dist, 2), std::invalid_argument);
  CHECK_THROWS_AS(rw::ce_reward(dist, -1), std::invalid_argument);
  CHECK_THROWS_AS(rw::neg_rewards(dist, 0, {0.0, 0.0, 0.0, 3}),
                  std::invalid_argument);
}
