#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rewardforge/model.hpp"
#include "rewardforge/rng.hpp"
#include "rewardforge/tasks.hpp"

namespace rewardforge::eval {

struct SampleSettings {
  int m = 16;             // samples per prompt
  double temperature = 0.7;
  double top_p = 0.95;
  int max_len = 16;       // response length cap
  std::uint64_t seed = 1;
};

// Temperature + nucleus sampling from one probability row. The nucleus is
// the smallest prefix of probability-sorted tokens (ties toward the lower
// index) whose cumulative mass reaches top_p, renormalized before the draw.
// top_p = 1 reduces to plain temperature sampling.
std::int32_t nucleus_sample_row(std::span<const double> probs,
                                double temperature, double top_p,
                                RngState& rng);

// Unbiased pass@k estimator from m samples with c correct, in the
// overflow-safe product form 1 - prod_{i<k} (m-c-i)/(m-i).
double pass_at_k(int m, int c, int k);

// Majority vote: 1 iff the modal canonicalized answer equals the gold
// answer; modal ties break toward the earliest-occurring answer.
int cons_at_m(std::span<const std::string> answers, std::string_view gold);

struct TaskResult {
  std::string prompt;
  std::string gold;
  int m = 0;
  int correct = 0;
  int cons = 0;
  std::vector<double> pass;  // aligned with EvalReport::ks
};

struct EvalReport {
  int tasks_evaluated = 0;
  int tasks_excluded = 0;  // prompts that do not fit the model context
  int m = 0;
  double avg_at_m = 0.0;
  double cons_at_m = 0.0;
  std::vector<int> ks;
  std::vector<double> pass_at_k;  // aggregate, aligned with ks
  std::vector<TaskResult> per_task;

  nlohmann::json to_json() const;
};

// m generations per task with temperature/top-p sampling, verified against
// the gold answers; aggregates are means over evaluated tasks. Deterministic
// under a fixed settings.seed. Pass raw_dump to also write one JSONL line
// per task with every sample and its reward.
EvalReport evaluate(const model::ModelState& state,
                    std::span<const data::TaskInstance> tasks,
                    const SampleSettings& settings, std::span<const int> ks,
                    const std::optional<std::filesystem::path>& raw_dump =
                        std::nullopt);

}  // namespace rewardforge::eval
