#include "rewardforge/objective.hpp"

#include <cmath>
#include <stdexcept>

#include "rewardforge/numerics.hpp"

namespace rewardforge::objective {

namespace {

TokenDiagnostics make_diagnostics(std::span<const double> probs,
                                  std::span<const double> log_probs,
                                  std::int32_t target,
                                  const reward::RewardRow& row,
                                  double expected_reward,
                                  const reward::RewardConfig& cfg) {
  TokenDiagnostics diag;
  diag.ce_nll = -log_probs[static_cast<size_t>(target)];
  diag.entropy = numerics::entropy(probs);
  diag.mean_reward = expected_reward;
  diag.reward_clamped = row.clamped;
  double head = 0.0;
  double head_ex_target = 0.0;
  for (std::int32_t idx : numerics::top_k_indices(probs, cfg.k)) {
    head += probs[static_cast<size_t>(idx)];
    if (idx != target) head_ex_target += probs[static_cast<size_t>(idx)];
  }
  diag.mass_out_topk = std::max(0.0, 1.0 - head);
  diag.mass_topk_ex_target = head_ex_target;
  return diag;
}

}  // namespace

ObjectiveOutput token_gradient(std::span<const double> logits,
                               std::int32_t target,
                               const reward::RewardConfig& cfg) {
  const std::vector<double> log_probs = numerics::log_softmax(logits);
  std::vector<double> probs(logits.size());
  for (size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(log_probs[i]);

  const reward::RewardRow row = reward::shaped_rewards(probs, target, cfg);

  double expected = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) expected += probs[i] * row.rewards[i];

  ObjectiveOutput out;
  out.dloss_dlogits.resize(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) {
    out.dloss_dlogits[i] = -probs[i] * (row.rewards[i] - expected);
  }
  out.diag = make_diagnostics(probs, log_probs, target, row, expected, cfg);
  return out;
}

std::vector<double> frozen_weights(std::span<const double> logits,
                                   std::int32_t target,
                                   const reward::RewardConfig& cfg) {
  const std::vector<double> probs = numerics::softmax(logits);
  const reward::RewardRow row = reward::shaped_rewards(probs, target, cfg);
  std::vector<double> weights(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) {
    weights[i] = probs[i] * row.rewards[i];
  }
  return weights;
}

double surrogate_loss(std::span<const double> logits,
                      std::span<const double> weights) {
  if (weights.size() != logits.size()) {
    throw std::invalid_argument("surrogate weights/logits length mismatch");
  }
  const std::vector<double> log_probs = numerics::log_softmax(logits);
  double loss = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    loss -= weights[i] * log_probs[i];
  }
  return loss;
}

double surrogate_loss(std::span<const double> logits, std::int32_t target,
                      const reward::RewardConfig& cfg) {
  return surrogate_loss(logits, frozen_weights(logits, target, cfg));
}

BatchObjective batch_objective(std::span<const double> logits, int vocab,
                               std::span<const std::int32_t> targets,
                               std::span<const std::uint8_t> mask,
                               const reward::RewardConfig& cfg) {
  if (vocab < 2) throw std::invalid_argument("vocab must be >= 2");
  const size_t rows = targets.size();
  if (mask.size() != rows || logits.size() != rows * static_cast<size_t>(vocab)) {
    throw std::invalid_argument("batch_objective shape mismatch");
  }

  BatchObjective out;
  out.dloss_dlogits.assign(logits.size(), 0.0);

  std::int64_t live = 0;
  std::int64_t clamped = 0;
  for (size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    auto row_logits = logits.subspan(r * static_cast<size_t>(vocab),
                                     static_cast<size_t>(vocab));
    ObjectiveOutput token = token_gradient(row_logits, targets[r], cfg);
    for (int j = 0; j < vocab; ++j) {
      out.dloss_dlogits[r * static_cast<size_t>(vocab) + static_cast<size_t>(j)] =
          token.dloss_dlogits[static_cast<size_t>(j)];
    }
    out.diag.ce_nll += token.diag.ce_nll;
    out.diag.entropy += token.diag.entropy;
    out.diag.mean_reward += token.diag.mean_reward;
    out.diag.mass_out_topk += token.diag.mass_out_topk;
    out.diag.mass_topk_ex_target += token.diag.mass_topk_ex_target;
    if (token.diag.reward_clamped) ++clamped;
    ++live;
  }
  if (live == 0) throw std::invalid_argument("batch_objective: all positions masked");

  const double inv = 1.0 / static_cast<double>(live);
  for (double& g : out.dloss_dlogits) g *= inv;
  out.diag.ce_nll *= inv;
  out.diag.entropy *= inv;
  out.diag.mean_reward *= inv;
  out.diag.mass_out_topk *= inv;
  out.diag.mass_topk_ex_target *= inv;
  out.diag.clamp_rate = static_cast<double>(clamped) * inv;
  out.diag.ppl = std::exp(out.diag.ce_nll);
  out.diag.positions = live;
  return out;
}

}  // namespace rewardforge::objective
