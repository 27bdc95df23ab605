#include "rewardforge/trainer.hpp"

#include <chrono>
#include <cmath>
#include <memory>

#include "rewardforge/batching.hpp"
#include "rewardforge/checkpoint.hpp"
#include "rewardforge/objective.hpp"
#include "rewardforge/rng.hpp"

namespace rewardforge::train {

namespace {

using Clock = std::chrono::steady_clock;

struct IntervalStats {
  double ce_nll = 0.0;
  double entropy = 0.0;
  double mean_reward = 0.0;
  double clamp_rate = 0.0;
  std::int64_t steps = 0;

  void add(const objective::BatchDiagnostics& d) {
    ce_nll += d.ce_nll;
    entropy += d.entropy;
    mean_reward += d.mean_reward;
    clamp_rate += d.clamp_rate;
    ++steps;
  }
  void reset() { *this = IntervalStats{}; }
};

struct HoldoutEval {
  double ppl = 1.0;
  double entropy = 0.0;
  double mass_out_topk = 0.0;
  double mass_topk_ex_target = 0.0;
};

HoldoutEval eval_holdout(const model::ModelState& state,
                         const data::BatchStream* stream, int n_batches,
                         const reward::RewardConfig& rcfg) {
  HoldoutEval out;
  if (stream == nullptr) return out;
  const std::int64_t limit =
      std::min<std::int64_t>(n_batches, stream->batches_per_epoch());
  double nll = 0.0, h = 0.0, mo = 0.0, mt = 0.0;
  std::int64_t positions = 0;
  for (std::int64_t i = 0; i < limit; ++i) {
    const data::Batch batch = stream->batch_at(i);
    const model::ForwardResult fwd =
        model::forward(state, batch.inputs, batch.batch_size, batch.context_len);
    const objective::BatchObjective bo = objective::batch_objective(
        fwd.logits, state.cfg.vocab_size, batch.targets, batch.mask, rcfg);
    const double w = static_cast<double>(bo.diag.positions);
    nll += bo.diag.ce_nll * w;
    h += bo.diag.entropy * w;
    mo += bo.diag.mass_out_topk * w;
    mt += bo.diag.mass_topk_ex_target * w;
    positions += bo.diag.positions;
  }
  if (positions > 0) {
    const double inv = 1.0 / static_cast<double>(positions);
    out.ppl = std::exp(nll * inv);
    out.entropy = h * inv;
    out.mass_out_topk = mo * inv;
    out.mass_topk_ex_target = mt * inv;
  }
  return out;
}

std::int64_t tokens_seen_until(const data::BatchStream& stream,
                               std::int64_t local_steps) {
  std::int64_t total = 0;
  for (std::int64_t i = 0; i < local_steps; ++i) {
    const data::Batch batch = stream.batch_at(i);
    for (std::uint8_t m : batch.mask) total += m;
  }
  return total;
}

PhaseResult run_phase(model::ModelState& state,
                      const config::ExperimentConfig& cfg,
                      const RunOptions& opts, const std::string& phase) {
  const bool is_pretrain = phase == "pretrain";
  const std::int64_t phase_begin = is_pretrain ? 0 : cfg.pretrain.steps;
  const std::int64_t phase_steps =
      is_pretrain ? cfg.pretrain.steps : cfg.midtrain.steps;
  const std::int64_t phase_end = phase_begin + phase_steps;
  const int interval = is_pretrain ? cfg.pretrain.eval_interval
                                   : cfg.midtrain.eval_interval;

  PhaseResult result;
  if (phase_steps == 0) return result;
  if (state.step < phase_begin || state.step >= phase_end) {
    throw config::MissingDependency(
        phase + " expects a state at global step [" +
        std::to_string(phase_begin) + ", " + std::to_string(phase_end) +
        "), got " + std::to_string(state.step));
  }

  const std::string corpus_path =
      is_pretrain ? cfg.data.pretrain_corpus : cfg.data.midtrain_corpus;
  if (corpus_path.empty() || !std::filesystem::exists(corpus_path)) {
    throw config::MissingDependency(phase + " corpus not found: " +
                                    corpus_path);
  }
  CorpusSplit split = split_corpus(data::load_corpus(corpus_path).documents,
                                   cfg.data.holdout_fraction);

  const data::BatchStream train_stream(
      std::move(split.train), cfg.model.context_len, cfg.data.batch_size,
      derive_seed(cfg.seed, "batches-" + phase));
  std::unique_ptr<data::BatchStream> holdout_stream;
  if (!split.holdout.empty()) {
    holdout_stream = std::make_unique<data::BatchStream>(
        std::move(split.holdout), cfg.model.context_len, cfg.data.batch_size,
        derive_seed(cfg.seed, "holdout-" + phase));
  }

  std::filesystem::create_directories(opts.run_dir);
  const bool resuming = state.step > phase_begin;
  const std::filesystem::path metrics_path = opts.run_dir / "metrics.jsonl";
  const bool append = resuming && std::filesystem::exists(metrics_path);
  metrics::JsonlWriter writer(metrics_path, append);

  std::int64_t tokens_seen =
      resuming ? tokens_seen_until(train_stream, state.step - phase_begin) : 0;

  const auto emit = [&](const IntervalStats& stats, double lr, double wall_ms) {
    const HoldoutEval holdout = eval_holdout(
        state, holdout_stream.get(), cfg.data.holdout_batches, cfg.reward);
    metrics::MetricsRecord rec;
    rec.phase = phase;
    rec.step = state.step;
    rec.tokens_seen = tokens_seen;
    rec.lr = lr;
    if (stats.steps > 0) {
      const double inv = 1.0 / static_cast<double>(stats.steps);
      rec.ppl = std::exp(stats.ce_nll * inv);
      rec.mean_entropy = stats.entropy * inv;
      rec.mean_reward = stats.mean_reward * inv;
      rec.reward_clamp_rate = stats.clamp_rate * inv;
    } else {
      rec.ppl = holdout.ppl;
      rec.mean_entropy = holdout.entropy;
    }
    rec.ppl_holdout = holdout_stream ? holdout.ppl : rec.ppl;
    rec.mass_out_topk = holdout.mass_out_topk;
    rec.mass_topk_ex_target = holdout.mass_topk_ex_target;
    rec.wall_ms = opts.deterministic ? 0.0 : wall_ms;
    writer.write(rec);
    writer.flush();
    result.records.push_back(std::move(rec));
    model::save_checkpoint(opts.run_dir / "ckpt-latest.bin", state);
  };

  if (!resuming) {
    emit(IntervalStats{}, cfg.schedule.lr_at(state.step + 1), 0.0);
  }

  IntervalStats stats;
  std::int64_t steps_done = 0;
  auto interval_start = Clock::now();
  while (state.step < phase_end) {
    if (opts.stop_after_steps > 0 && steps_done >= opts.stop_after_steps) break;
    const std::int64_t local_step = state.step - phase_begin;
    const data::Batch batch = train_stream.batch_at(local_step);
    try {
      const model::ForwardResult fwd = model::forward(
          state, batch.inputs, batch.batch_size, batch.context_len);
      const objective::BatchObjective bo = objective::batch_objective(
          fwd.logits, cfg.model.vocab_size, batch.targets, batch.mask,
          cfg.reward);
      if (!std::isfinite(bo.diag.ce_nll)) {
        throw std::runtime_error("non-finite loss");
      }
      const model::GradBuffers grads =
          model::backward(state, fwd.cache, bo.dloss_dlogits);
      const model::StepOutcome outcome =
          model::clip_and_step(state, grads, cfg.schedule, cfg.optim);
      if (!outcome.applied) {
        throw std::runtime_error("non-finite gradient, step skipped");
      }
      stats.add(bo.diag);
      tokens_seen += bo.diag.positions;
      ++steps_done;
      if (state.step % interval == 0 || state.step == phase_end) {
        const double wall_ms =
            std::chrono::duration<double, std::milli>(Clock::now() -
                                                      interval_start)
                .count();
        emit(stats, outcome.lr, wall_ms);
        stats.reset();
        interval_start = Clock::now();
      }
    } catch (const std::exception& e) {
      // Abort; ckpt-latest.bin still holds the last good state.
      result.aborted = true;
      result.abort_reason = e.what();
      return result;
    }
  }

  if (state.step == phase_end) {
    model::save_checkpoint(opts.run_dir / ("ckpt-" + phase + "-final.bin"),
                           state);
  }
  return result;
}

}  // namespace

model::ModelState init_for_run(const config::ExperimentConfig& cfg) {
  model::ModelConfig mc = cfg.model;
  mc.seed = derive_seed(cfg.seed, "model");
  return model::init_model(mc);
}

CorpusSplit split_corpus(std::vector<std::string> documents,
                         double holdout_fraction) {
  CorpusSplit split;
  if (holdout_fraction <= 0.0 || documents.size() < 2) {
    split.train = std::move(documents);
    return split;
  }
  const std::int64_t period = std::max<std::int64_t>(
      2, std::llround(1.0 / holdout_fraction));
  for (size_t i = 0; i < documents.size(); ++i) {
    if (static_cast<std::int64_t>(i) % period == period - 1) {
      split.holdout.push_back(std::move(documents[i]));
    } else {
      split.train.push_back(std::move(documents[i]));
    }
  }
  if (split.train.empty()) {
    split.train = std::move(split.holdout);
    split.holdout.clear();
  }
  return split;
}

PhaseResult run_pretrain(model::ModelState& state,
                         const config::ExperimentConfig& cfg,
                         const RunOptions& opts) {
  return run_phase(state, cfg, opts, "pretrain");
}

PhaseResult run_midtrain(model::ModelState& state,
                         const config::ExperimentConfig& cfg,
                         const RunOptions& opts) {
  return run_phase(state, cfg, opts, "midtrain");
}

}  // namespace rewardforge::train
