#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rewardforge::reward {

// Shaping parameters for the generalized next-token reward.
//   beta        exponent of the positive scaling factor (1 - p)^beta;
//               beta < 0 amplifies the ground-truth reward, beta > 0
//               attenuates it, beta = 0 is the plain inverse-probability
//               reward.
//   lambda_top  reward for non-target tokens inside the top-k set.
//   lambda_tail reward for non-target tokens outside the top-k set.
//   k           size of the top-k set.
// The zero config (0, 0, 0, k) reproduces cross-entropy behaviour exactly.
struct RewardConfig {
  double beta = 0.0;
  double lambda_top = 0.0;
  double lambda_tail = 0.0;
  int k = 1;

  bool is_zero() const {
    return beta == 0.0 && lambda_top == 0.0 && lambda_tail == 0.0;
  }
};

// Full length-V reward row for one position. Rewards are detached values:
// nothing downstream ever differentiates through them.
struct RewardRow {
  std::vector<double> rewards;
  std::int32_t target = 0;
  bool clamped = false;  // target probability hit p_min or the r_max cap
};

// Probabilities below this are clamped before inversion; the inverse reward
// diverges at exact zero, which can only arise from underflow.
inline constexpr double kProbFloor = 1e-12;

// Cap on the positive reward; beta < 0 with tiny p produces astronomically
// large values otherwise. Hitting the cap sets the clamped flag.
inline constexpr double kRewardCap = 1e6;

struct PosReward {
  double value = 0.0;
  bool clamped = false;
};

// Inverse-probability reward on the ground-truth token, zero elsewhere.
RewardRow ce_reward(std::span<const double> probs, std::int32_t target);

// Scaled positive reward exp((1-p)^beta * ln(1/p)), computed in log space.
// Conventions: p is clamped to [kProbFloor, 1]; pos_reward(1, beta) = 1 for
// every beta (continuity limit); beta = 0 returns 1/p exactly.
PosReward pos_reward(double p_target, double beta);

// lambda_top on non-target tokens inside the top-k set, lambda_tail outside;
// the target entry is always zero even when it lies inside the set.
RewardRow neg_rewards(std::span<const double> probs, std::int32_t target,
                      const RewardConfig& cfg);

// Composite row: pos_reward at the target, neg_rewards elsewhere.
RewardRow shaped_rewards(std::span<const double> probs, std::int32_t target,
                         const RewardConfig& cfg);

}  // namespace rewardforge::reward
