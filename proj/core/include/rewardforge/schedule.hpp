#pragma once

#include <cstdint>

namespace rewardforge::model {

// Warmup-stable-decay learning rate schedule: linear warmup from 0 to
// peak_lr, a constant plateau, then a cosine ramp down to final_lr. Steps
// are 1-based; lr_at(0) is defined as lr_at(1) so the first optimizer step
// never sees a zero rate.
struct LrSchedule {
  double peak_lr = 3e-3;
  int warmup_steps = 200;
  int stable_steps = 1800;
  int decay_steps = 0;
  double final_lr = 3e-4;

  double lr_at(std::int64_t step) const;
};

struct OptimConfig {
  double weight_decay = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double grad_clip = 1.0;
  bool decay_vectors = false;  // 1-D tensors (norm gains) skip weight decay
};

}  // namespace rewardforge::model
