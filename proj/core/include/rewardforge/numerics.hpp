#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rewardforge/rng.hpp"

namespace rewardforge::numerics {

// A logit row is an unnormalized score vector over the vocabulary (length
// V >= 2, all entries finite). A prob row is its softmax: entries in [0, 1]
// summing to 1 within 1e-9. All distribution math is done in double.
using LogitRow = std::vector<double>;
using ProbRow = std::vector<double>;

// Throws std::invalid_argument when the row violates the stated invariants.
void check_logits(std::span<const double> logits);
void check_probs(std::span<const double> probs);

// Max-subtracted log-softmax; stable for logits up to +-1e4.
std::vector<double> log_softmax(std::span<const double> logits);
void log_softmax_into(std::span<const double> logits, std::span<double> out);

// Softmax with the same shift-invariant stabilization.
std::vector<double> softmax(std::span<const double> logits);
void softmax_into(std::span<const double> logits, std::span<double> out);

// Shannon entropy in nats; 0 * ln 0 is treated as 0. Result in [0, ln V].
double entropy(std::span<const double> probs);

// Indices of the k largest probabilities, ordered by decreasing probability.
// Ties break toward the lower index so the top-k set is reproducible.
std::vector<std::int32_t> top_k_indices(std::span<const double> probs, int k);

// Draws one index from the distribution by inverse-CDF walk.
std::int32_t categorical_sample(std::span<const double> probs, RngState& rng);

}  // namespace rewardforge::numerics
