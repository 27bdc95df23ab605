#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rewardforge/reward.hpp"

namespace rewardforge::objective {

// Per-position training diagnostics. ce_nll is always the standard
// cross-entropy NLL regardless of the reward config so perplexity stays
// comparable across configs. The top-k mass fields use the same k as the
// reward config and feed the local-entropy tracking.
struct TokenDiagnostics {
  double ce_nll = 0.0;        // nats
  double entropy = 0.0;       // nats
  double mean_reward = 0.0;   // E_pi[r]
  bool reward_clamped = false;
  double mass_out_topk = 0.0;        // probability mass outside K_t
  double mass_topk_ex_target = 0.0;  // mass on K_t minus the target
};

// The convention throughout the repository: we minimize L = -J, so every
// stored gradient is a descent direction for L.
struct ObjectiveOutput {
  std::vector<double> dloss_dlogits;  // length V, sums to ~0
  TokenDiagnostics diag;
};

// Exact-expectation single-step policy gradient over the vocabulary:
// ascent g_j = pi_j * (r_j - sum_a pi_a r_a) with r = shaped_rewards(pi),
// returned negated as dloss_dlogits. With the zero config this reduces to
// softmax(z) - onehot(target), the cross-entropy gradient.
ObjectiveOutput token_gradient(std::span<const double> logits,
                               std::int32_t target,
                               const reward::RewardConfig& cfg);

// Frozen surrogate weights w_a = pi_a(z0) * r_a(z0) at the evaluation point.
std::vector<double> frozen_weights(std::span<const double> logits,
                                   std::int32_t target,
                                   const reward::RewardConfig& cfg);

// Surrogate scalar L(z) = -sum_a w_a log pi(a|z) for fixed weights. Its
// gradient in z at the freeze point equals token_gradient's dloss_dlogits;
// tests differentiate it by finite differences to cross-check the analytic
// path.
double surrogate_loss(std::span<const double> logits,
                      std::span<const double> weights);
double surrogate_loss(std::span<const double> logits, std::int32_t target,
                      const reward::RewardConfig& cfg);

struct BatchDiagnostics {
  double ce_nll = 0.0;
  double entropy = 0.0;
  double mean_reward = 0.0;
  double clamp_rate = 0.0;
  double mass_out_topk = 0.0;
  double mass_topk_ex_target = 0.0;
  double ppl = 1.0;  // exp(mean ce_nll)
  std::int64_t positions = 0;
};

struct BatchObjective {
  // Flattened (positions x V) descent gradient, already divided by the
  // number of unmasked positions (token-mean reduction). Masked rows are 0.
  std::vector<double> dloss_dlogits;
  BatchDiagnostics diag;
};

// Token-mean reduction of token_gradient over the unmasked positions of a
// flattened (n_rows x V) logit block. mask[i] == 0 skips row i entirely.
// Throws if every position is masked.
BatchObjective batch_objective(std::span<const double> logits, int vocab,
                               std::span<const std::int32_t> targets,
                               std::span<const std::uint8_t> mask,
                               const reward::RewardConfig& cfg);

}  // namespace rewardforge::objective
