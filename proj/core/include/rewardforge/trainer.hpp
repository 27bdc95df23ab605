#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rewardforge/config.hpp"
#include "rewardforge/metrics.hpp"
#include "rewardforge/model.hpp"

namespace rewardforge::train {

struct RunOptions {
  std::filesystem::path run_dir;
  bool deterministic = false;  // zero wall_ms so reruns are bit-identical
  // Stop after this many optimizer steps even if the phase has more; used to
  // exercise interruption + resume. 0 means run the phase to its end.
  std::int64_t stop_after_steps = 0;
};

struct PhaseResult {
  bool aborted = false;      // non-finite loss; last good checkpoint retained
  std::string abort_reason;
  std::vector<metrics::MetricsRecord> records;
};

// Builds the initial model for an experiment; the model seed derives from
// the master seed so the whole run replays from config alone.
model::ModelState init_for_run(const config::ExperimentConfig& cfg);

// Pre-training over cfg.data.pretrain_corpus for global steps
// (state.step, cfg.pretrain.steps]. A state loaded from a mid-phase
// checkpoint continues bit-identically to an uninterrupted run.
//
// Run directory side effects: metrics.jsonl (one record per eval_interval),
// ckpt-latest.bin at every record, ckpt-pretrain-final.bin on completion.
PhaseResult run_pretrain(model::ModelState& state,
                         const config::ExperimentConfig& cfg,
                         const RunOptions& opts);

// Mid-training: corpus switch plus the decay segment of the schedule, for
// global steps (pretrain.steps, pretrain.steps + midtrain.steps]. A zero-step
// phase leaves the state untouched.
PhaseResult run_midtrain(model::ModelState& state,
                         const config::ExperimentConfig& cfg,
                         const RunOptions& opts);

// Held-out documents are every round(1/holdout_fraction)-th document; the
// rest train. Exposed for tests and the eval tool.
struct CorpusSplit {
  std::vector<std::string> train;
  std::vector<std::string> holdout;
};
CorpusSplit split_corpus(std::vector<std::string> documents,
                         double holdout_fraction);

}  // namespace rewardforge::train
