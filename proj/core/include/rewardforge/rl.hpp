#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rewardforge/config.hpp"
#include "rewardforge/metrics.hpp"
#include "rewardforge/model.hpp"
#include "rewardforge/rng.hpp"
#include "rewardforge/tasks.hpp"

namespace rewardforge::rl {

struct RolloutParams {
  int group_size = 8;
  double temperature = 1.0;  // <= 0 selects argmax (greedy) decoding
  int max_response_len = 16;
};

// G sampled responses for one prompt. Old log-probs are recorded at sampling
// time; rewards are binary verifiable outcomes filled in by the caller.
struct GroupRollout {
  std::vector<std::int32_t> prompt_tokens;
  std::vector<std::vector<std::int32_t>> responses;  // stop token excluded
  std::vector<std::vector<double>> old_logprobs;
  std::vector<double> entropy_sums;  // per response, nats summed over tokens
  std::vector<int> rewards;
  std::vector<double> advantages;
  bool truncated = false;  // some response hit the length/context cap
};

// Autoregressive sampling of one group; stops at EOS or SEP. Deterministic
// given the rng state.
GroupRollout rollout_group(const model::ModelState& state,
                           std::span<const std::int32_t> prompt,
                           const RolloutParams& params, RngState& rng);

// Group-relative advantages: (r - mean) / (pop_std + 1e-6), or r - mean in
// mean_only mode. Returns nullopt for zero-variance groups, which are
// dropped entirely (dynamic sampling without refill).
std::optional<std::vector<double>> group_advantages(
    std::span<const int> rewards, bool mean_only = false);

// One token's clipped surrogate term, differentiable in the (new) logits:
//   rho  = exp(log pi_new(action) - old_logprob)
//   term = min(rho * A, clip(rho, 1 - eps_low, 1 + eps_high) * A)
// loss = -term; dlogits is its exact gradient. A non-finite ratio excludes
// the token (zero loss and gradient, excluded flag set).
struct ClippedTokenTerm {
  double loss = 0.0;
  double ratio = 1.0;
  bool clipped = false;
  bool excluded = false;
  std::vector<double> dlogits;
};
ClippedTokenTerm clipped_token_term(std::span<const double> logits,
                                    std::int32_t action, double old_logprob,
                                    double advantage, double eps_low,
                                    double eps_high);

struct UpdateStats {
  double loss = 0.0;
  double mean_ratio = 1.0;
  double clip_fraction = 0.0;
  int tokens = 0;
  int excluded_tokens = 0;
  bool applied = false;
};

// Single on-policy optimizer pass over the retained groups: token-mean
// within each response, response-mean across the batch. No KL term of any
// kind. The schedule supplies the (constant) RL learning rate.
UpdateStats grpo_update(model::ModelState& state,
                        std::span<const GroupRollout> groups,
                        const config::RlConfig& cfg,
                        const model::LrSchedule& schedule,
                        const model::OptimConfig& optim);

struct RlRunOptions {
  std::filesystem::path run_dir;
  bool deterministic = false;
  bool dump_rollouts = false;  // rollouts.jsonl audit trail
  // Fresh starts reset the step counter and Adam moments (a new optimization
  // phase); resume continues from state.step within the rl stage.
  bool resume = false;
};

struct RlResult {
  bool aborted = false;
  std::string abort_reason;
  std::vector<metrics::MetricsRecord> records;
};

// Full RLVR stage: per step, roll out groups for a batch of prompts, verify,
// filter zero-variance groups, and apply one GRPO update. Two stages with
// different response-length caps (stage1_steps under max_resp_stage1, the
// rest under max_resp_stage2). Optimizer moments restart at the first step.
RlResult run_rl(model::ModelState& state,
                std::span<const data::TaskInstance> tasks,
                const config::ExperimentConfig& cfg, const RlRunOptions& opts);

}  // namespace rewardforge::rl
