#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rewardforge/corpus.hpp"
#include "rewardforge/model.hpp"
#include "rewardforge/reward.hpp"

namespace rewardforge::config {

// Thrown for malformed or rejected configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a required input (corpus, checkpoint) is missing (exit code 3).
struct MissingDependency : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Desk-scale default for the top-k cutoff: 0.4% of the vocabulary, floored
// at 2. There is no principled mapping from large-vocabulary settings; the
// value is exposed as a sweep axis rather than inferred.
int desk_top_k(int vocab_size);

struct DataConfig {
  std::string pretrain_corpus = "data/pretrain.txt";
  std::string midtrain_corpus;
  double holdout_fraction = 0.1;
  int batch_size = 8;
  int holdout_batches = 8;  // batches per held-out evaluation pass
};

struct PhaseConfig {
  int steps = 2000;
  int eval_interval = 50;
};

struct TaskSetConfig {
  std::string family = "addition";
  data::GeneratorParams params;
  std::uint64_t seed = 1;
  int count = 64;
};

struct RlConfig {
  int group_size = 8;
  int prompts_per_step = 8;
  int steps = 300;
  int stage1_steps = 200;
  int max_resp_stage1 = 16;
  int max_resp_stage2 = 32;
  double temperature = 1.0;
  double eps_low = 0.2;
  double eps_high = 0.28;
  double lr = 1e-4;
  std::string adv_mode = "mean_std";  // or "mean_only"
  int eval_interval = 10;
  TaskSetConfig tasks;

  void validate() const;
};

struct EvalConfig {
  int m = 16;
  double temperature = 0.7;
  double top_p = 0.95;
  int max_len = 16;
  std::vector<int> ks = {1, 2, 4, 8};
  TaskSetConfig tasks;

  void validate() const;
};

struct SweepConfig {
  std::vector<reward::RewardConfig> rewards;
  std::vector<std::uint64_t> seeds;
  bool run_eval = false;
};

// The whole experiment document. Serialization is canonical JSON (sorted
// keys, UTF-8); unknown keys anywhere are rejected so a config hash
// identifies a run.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string out_root = "runs";
  model::ModelConfig model;
  reward::RewardConfig reward{0.0, 0.0, 0.0, 2};
  model::LrSchedule schedule;
  model::OptimConfig optim;
  DataConfig data;
  PhaseConfig pretrain;
  PhaseConfig midtrain{0, 50};
  RlConfig rl;
  EvalConfig eval;
  SweepConfig sweep;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);

  static ExperimentConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  void validate() const;
};

}  // namespace rewardforge::config
