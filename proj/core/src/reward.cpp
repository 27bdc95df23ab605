#include "rewardforge/reward.hpp"

#include <cmath>
#include <stdexcept>

#include "rewardforge/numerics.hpp"

namespace rewardforge::reward {

namespace {

void check_target(size_t v, std::int32_t target) {
  if (target < 0 || static_cast<size_t>(target) >= v) {
    throw std::invalid_argument("target index out of range");
  }
}

}  // namespace

RewardRow ce_reward(std::span<const double> probs, std::int32_t target) {
  numerics::check_probs(probs);
  check_target(probs.size(), target);
  RewardRow row;
  row.rewards.assign(probs.size(), 0.0);
  row.target = target;
  double p = probs[static_cast<size_t>(target)];
  if (p < kProbFloor) {
    p = kProbFloor;
    row.clamped = true;
  }
  row.rewards[static_cast<size_t>(target)] = 1.0 / p;
  return row;
}

PosReward pos_reward(double p_target, double beta) {
  PosReward out;
  double p = p_target;
  if (p < kProbFloor) {
    p = kProbFloor;
    out.clamped = true;
  }
  if (p >= 1.0) {
    out.value = 1.0;
    return out;
  }
  if (beta == 0.0) {
    out.value = 1.0 / p;  // exact CE case, no exp/log round trip
  } else {
    const double scale = std::pow(1.0 - p, beta);
    out.value = std::exp(scale * -std::log(p));
  }
  if (!std::isfinite(out.value) || out.value > kRewardCap) {
    out.value = kRewardCap;
    out.clamped = true;
  }
  return out;
}

RewardRow neg_rewards(std::span<const double> probs, std::int32_t target,
                      const RewardConfig& cfg) {
  numerics::check_probs(probs);
  check_target(probs.size(), target);
  RewardRow row;
  row.rewards.assign(probs.size(), cfg.lambda_tail);
  row.target = target;
  for (std::int32_t idx : numerics::top_k_indices(probs, cfg.k)) {
    row.rewards[static_cast<size_t>(idx)] = cfg.lambda_top;
  }
  row.rewards[static_cast<size_t>(target)] = 0.0;
  return row;
}

RewardRow shaped_rewards(std::span<const double> probs, std::int32_t target,
                         const RewardConfig& cfg) {
  RewardRow row = neg_rewards(probs, target, cfg);
  const PosReward pos =
      pos_reward(probs[static_cast<size_t>(target)], cfg.beta);
  row.rewards[static_cast<size_t>(target)] = pos.value;
  row.clamped = pos.clamped;
  return row;
}

}  // namespace rewardforge::reward
