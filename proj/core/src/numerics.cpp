#include "rewardforge/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rewardforge::numerics {

void check_logits(std::span<const double> logits) {
  if (logits.size() < 2) {
    throw std::invalid_argument("logit row needs V >= 2");
  }
  for (double z : logits) {
    if (!std::isfinite(z)) {
      throw std::invalid_argument("logit row contains non-finite entry");
    }
  }
}

void check_probs(std::span<const double> probs) {
  if (probs.size() < 2) {
    throw std::invalid_argument("prob row needs V >= 2");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("prob row entry outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("prob row does not sum to 1");
  }
}

void log_softmax_into(std::span<const double> logits, std::span<double> out) {
  check_logits(logits);
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = logits[i] - zmax;
    sum += std::exp(out[i]);
  }
  const double lse = std::log(sum);
  for (size_t i = 0; i < logits.size(); ++i) out[i] -= lse;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  log_softmax_into(logits, out);
  return out;
}

void softmax_into(std::span<const double> logits, std::span<double> out) {
  check_logits(logits);
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - zmax);
    sum += out[i];
  }
  const double inv = 1.0 / sum;
  for (size_t i = 0; i < logits.size(); ++i) out[i] *= inv;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  softmax_into(logits, out);
  return out;
}

double entropy(std::span<const double> probs) {
  check_probs(probs);
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

std::vector<std::int32_t> top_k_indices(std::span<const double> probs, int k) {
  check_probs(probs);
  const int v = static_cast<int>(probs.size());
  if (k < 1 || k > v) {
    throw std::invalid_argument("top-k k out of range [1, V]");
  }
  std::vector<std::int32_t> idx(probs.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto by_prob_then_index = [&](std::int32_t a, std::int32_t b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    by_prob_then_index);
  idx.resize(k);
  return idx;
}

std::int32_t categorical_sample(std::span<const double> probs, RngState& rng) {
  check_probs(probs);
  const double u = rng.next_double();
  double cum = 0.0;
  std::int32_t last_positive = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = static_cast<std::int32_t>(i);
    cum += probs[i];
    if (u < cum) return static_cast<std::int32_t>(i);
  }
  // u landed in the rounding slack past the last bucket.
  return last_positive;
}

}  // namespace rewardforge::numerics
