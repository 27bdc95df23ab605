#include "rewardforge/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rewardforge::model {

double LrSchedule::lr_at(std::int64_t step) const {
  if (step < 1) step = 1;
  if (warmup_steps > 0 && step <= warmup_steps) {
    return peak_lr * static_cast<double>(step) /
           static_cast<double>(warmup_steps);
  }
  const std::int64_t after_warmup = step - warmup_steps;
  if (after_warmup <= stable_steps) return peak_lr;
  const std::int64_t into_decay = after_warmup - stable_steps;
  if (decay_steps <= 0 || into_decay >= decay_steps) return final_lr;
  const double progress =
      static_cast<double>(into_decay) / static_cast<double>(decay_steps);
  const double cosine = 0.5 * (1.0 + std::cos(progress * std::numbers::pi));
  return final_lr + (peak_lr - final_lr) * cosine;
}

}  // namespace rewardforge::model
