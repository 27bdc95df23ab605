#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace rewardforge::metrics {

// One training/eval step record, serialized as one JSON line. Core fields
// are always present; the RL-only fields appear only in rl-phase records.
// wall_ms is reported as 0 in deterministic mode so reruns are bit-identical.
//
// JSONL schema (keys sorted):
//   phase            "pretrain" | "midtrain" | "rl" | "eval"
//   step             int >= 0, strictly increasing within a phase
//   tokens_seen      cumulative supervised tokens (int >= 0)
//   lr               float >= 0
//   ppl              train perplexity, float >= 1
//   ppl_holdout      held-out perplexity, float >= 1
//   mean_entropy     nats, in [0, ln V]
//   mean_reward      float
//   reward_clamp_rate  fraction in [0, 1]
//   mass_out_topk        mean prob mass outside the top-k set (held-out)
//   mass_topk_ex_target  mean mass on top-k minus the target (held-out)
//   wall_ms          float >= 0
//   accuracy, resp_len_mean, policy_entropy   (rl phase only)
struct MetricsRecord {
  std::string phase;
  std::int64_t step = 0;
  std::int64_t tokens_seen = 0;
  double lr = 0.0;
  double ppl = 1.0;
  double ppl_holdout = 1.0;
  double mean_entropy = 0.0;
  double mean_reward = 0.0;
  double reward_clamp_rate = 0.0;
  double mass_out_topk = 0.0;
  double mass_topk_ex_target = 0.0;
  double wall_ms = 0.0;
  // rl extension
  std::optional<double> accuracy;
  std::optional<double> resp_len_mean;
  std::optional<double> policy_entropy;

  nlohmann::json to_json() const;
  static MetricsRecord from_json(const nlohmann::json& j);
};

// Throws std::runtime_error describing the first schema violation.
void validate_record(const nlohmann::json& j, int vocab_size);

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path, bool append = false);
  void write(const MetricsRecord& record);
  void flush();

 private:
  std::ofstream os_;
};

std::vector<MetricsRecord> read_jsonl(const std::filesystem::path& path);

}  // namespace rewardforge::metrics
