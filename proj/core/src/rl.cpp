#include "rewardforge/rl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rewardforge/checkpoint.hpp"
#include "rewardforge/numerics.hpp"
#include "rewardforge/tokenizer.hpp"

namespace rewardforge::rl {

namespace {

bool is_stop_token(std::int32_t id) {
  return id == data::tok::kEos || id == data::tok::kSep;
}

std::int32_t pick_token(std::span<const double> probs, double temperature,
                        RngState& rng) {
  if (temperature <= 0.0) {
    // Greedy mode; ties toward the lower index.
    std::int32_t best = 0;
    for (size_t i = 1; i < probs.size(); ++i) {
      if (probs[i] > probs[static_cast<size_t>(best)]) {
        best = static_cast<std::int32_t>(i);
      }
    }
    return best;
  }
  return numerics::categorical_sample(probs, rng);
}

}  // namespace

GroupRollout rollout_group(const model::ModelState& state,
                           std::span<const std::int32_t> prompt,
                           const RolloutParams& params, RngState& rng) {
  if (params.group_size < 1) {
    throw std::invalid_argument("group_size must be >= 1");
  }
  if (prompt.empty()) {
    throw std::invalid_argument("rollout prompt must be non-empty");
  }
  const int context = state.cfg.context_len;
  if (static_cast<int>(prompt.size()) + 1 > context) {
    throw std::invalid_argument("prompt does not fit the model context");
  }

  GroupRollout group;
  group.prompt_tokens.assign(prompt.begin(), prompt.end());

  const int room = context - static_cast<int>(prompt.size());
  const int max_len = std::min(params.max_response_len, room);

  for (int g = 0; g < params.group_size; ++g) {
    std::vector<std::int32_t> seq(prompt.begin(), prompt.end());
    std::vector<std::int32_t> response;
    std::vector<double> logprobs;
    double entropy_sum = 0.0;
    bool stopped = false;
    while (static_cast<int>(response.size()) < max_len) {
      std::vector<double> logits = model::last_logits(state, seq);
      if (params.temperature > 0.0 && params.temperature != 1.0) {
        for (double& z : logits) z /= params.temperature;
      }
      const std::vector<double> log_probs = numerics::log_softmax(logits);
      std::vector<double> probs(log_probs.size());
      for (size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(log_probs[i]);

      const std::int32_t tok = pick_token(probs, params.temperature, rng);
      if (is_stop_token(tok)) {
        stopped = true;
        break;
      }
      response.push_back(tok);
      logprobs.push_back(log_probs[static_cast<size_t>(tok)]);
      entropy_sum += numerics::entropy(probs);
      seq.push_back(tok);
    }
    if (!stopped) group.truncated = true;
    group.responses.push_back(std::move(response));
    group.old_logprobs.push_back(std::move(logprobs));
    group.entropy_sums.push_back(entropy_sum);
  }
  group.rewards.assign(static_cast<size_t>(params.group_size), 0);
  return group;
}

std::optional<std::vector<double>> group_advantages(std::span<const int> rewards,
                                                    bool mean_only) {
  if (rewards.size() < 2) {
    throw std::invalid_argument("advantage group needs G >= 2");
  }
  const bool all_equal =
      std::all_of(rewards.begin(), rewards.end(),
                  [&](int r) { return r == rewards[0]; });
  if (all_equal) return std::nullopt;

  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (int r : rewards) mean += r;
  mean /= n;

  std::vector<double> adv(rewards.size());
  if (mean_only) {
    for (size_t i = 0; i < rewards.size(); ++i) adv[i] = rewards[i] - mean;
    return adv;
  }
  double var = 0.0;
  for (int r : rewards) var += (r - mean) * (r - mean);
  var /= n;  // population variance
  const double denom = std::sqrt(var) + 1e-6;
  for (size_t i = 0; i < rewards.size(); ++i) {
    adv[i] = (rewards[i] - mean) / denom;
  }
  return adv;
}

ClippedTokenTerm clipped_token_term(std::span<const double> logits,
                                    std::int32_t action, double old_logprob,
                                    double advantage, double eps_low,
                                    double eps_high) {
  ClippedTokenTerm out;
  const std::vector<double> log_probs = numerics::log_softmax(logits);
  const double new_logprob = log_probs[static_cast<size_t>(action)];
  const double ratio = std::exp(new_logprob - old_logprob);
  out.ratio = ratio;
  out.dlogits.assign(logits.size(), 0.0);
  if (!std::isfinite(ratio)) {
    out.excluded = true;
    return out;
  }

  const double lo = 1.0 - eps_low;
  const double hi = 1.0 + eps_high;
  const double clipped_ratio = std::clamp(ratio, lo, hi);
  const double unclipped = ratio * advantage;
  const double clipped = clipped_ratio * advantage;
  const double term = std::min(unclipped, clipped);
  out.loss = -term;
  out.clipped = clipped < unclipped;

  // Gradient flows only through the unclipped branch when it attains the
  // min; d(rho * A)/d(new_logprob) = rho * A.
  const double coef = unclipped <= clipped ? ratio * advantage : 0.0;
  if (coef != 0.0) {
    for (size_t i = 0; i < logits.size(); ++i) {
      const double pi = std::exp(log_probs[i]);
      const double indicator = static_cast<size_t>(action) == i ? 1.0 : 0.0;
      out.dlogits[i] = -coef * (indicator - pi);
    }
  }
  return out;
}

UpdateStats grpo_update(model::ModelState& state,
                        std::span<const GroupRollout> groups,
                        const config::RlConfig& cfg,
                        const model::LrSchedule& schedule,
                        const model::OptimConfig& optim) {
  UpdateStats stats;

  struct Item {
    const GroupRollout* group;
    size_t response;
    int seq_len;
  };
  std::vector<Item> items;
  int max_len = 0;
  for (const GroupRollout& g : groups) {
    if (g.advantages.size() != g.responses.size()) {
      throw std::invalid_argument("grpo_update: group missing advantages");
    }
    for (size_t r = 0; r < g.responses.size(); ++r) {
      if (g.responses[r].empty()) continue;  // nothing to update on
      const int len = static_cast<int>(g.prompt_tokens.size() +
                                       g.responses[r].size());
      items.push_back({&g, r, len});
      max_len = std::max(max_len, len);
    }
  }
  if (items.empty()) return stats;

  const int batch = static_cast<int>(items.size());
  const int vocab = state.cfg.vocab_size;
  std::vector<std::int32_t> tokens(static_cast<size_t>(batch) * max_len,
                                   data::tok::kPad);
  for (int b = 0; b < batch; ++b) {
    const Item& item = items[static_cast<size_t>(b)];
    const GroupRollout& g = *item.group;
    std::int32_t* row = &tokens[static_cast<size_t>(b) * max_len];
    std::copy(g.prompt_tokens.begin(), g.prompt_tokens.end(), row);
    std::copy(g.responses[item.response].begin(),
              g.responses[item.response].end(),
              row + g.prompt_tokens.size());
  }

  const model::ForwardResult fwd = model::forward(state, tokens, batch, max_len);

  std::vector<double> dlogits(fwd.logits.size(), 0.0);
  double ratio_sum = 0.0;
  int clipped_count = 0;
  const double resp_weight = 1.0 / static_cast<double>(batch);
  for (int b = 0; b < batch; ++b) {
    const Item& item = items[static_cast<size_t>(b)];
    const GroupRollout& g = *item.group;
    const std::vector<std::int32_t>& resp = g.responses[item.response];
    const double advantage = g.advantages[item.response];
    const double token_weight =
        resp_weight / static_cast<double>(resp.size());
    const size_t prompt_len = g.prompt_tokens.size();
    for (size_t t = 0; t < resp.size(); ++t) {
      const size_t pos = static_cast<size_t>(b) * max_len + prompt_len + t - 1;
      auto row = std::span<const double>(
          fwd.logits.data() + pos * static_cast<size_t>(vocab),
          static_cast<size_t>(vocab));
      ClippedTokenTerm term =
          clipped_token_term(row, resp[t], g.old_logprobs[item.response][t],
                             advantage, cfg.eps_low, cfg.eps_high);
      if (term.excluded) {
        ++stats.excluded_tokens;
        continue;
      }
      stats.loss += term.loss * token_weight;
      ratio_sum += term.ratio;
      if (term.clipped) ++clipped_count;
      ++stats.tokens;
      double* drow = &dlogits[pos * static_cast<size_t>(vocab)];
      for (int j = 0; j < vocab; ++j) {
        drow[j] += term.dlogits[static_cast<size_t>(j)] * token_weight;
      }
    }
  }
  if (stats.tokens > 0) {
    stats.mean_ratio = ratio_sum / stats.tokens;
    stats.clip_fraction =
        static_cast<double>(clipped_count) / stats.tokens;
  }

  const model::GradBuffers grads = model::backward(state, fwd.cache, dlogits);
  const model::StepOutcome outcome =
      model::clip_and_step(state, grads, schedule, optim);
  stats.applied = outcome.applied;
  return stats;
}

RlResult run_rl(model::ModelState& state,
                std::span<const data::TaskInstance> tasks,
                const config::ExperimentConfig& cfg, const RlRunOptions& opts) {
  RlResult result;
  const config::RlConfig& rc = cfg.rl;
  if (rc.steps == 0) return result;
  if (tasks.empty()) throw std::invalid_argument("run_rl: no tasks");

  if (opts.resume) {
    if (state.step >= rc.steps) {
      throw config::MissingDependency("rl resume: state already past rl.steps");
    }
  } else {
    // Fresh optimization phase: restart the Adam recurrence.
    state.step = 0;
    for (model::Tensor& t : state.params) {
      std::fill(t.m.begin(), t.m.end(), 0.0);
      std::fill(t.v.begin(), t.v.end(), 0.0);
    }
  }

  model::LrSchedule rl_schedule;
  rl_schedule.peak_lr = rc.lr;
  rl_schedule.warmup_steps = 0;
  rl_schedule.stable_steps = 1 << 30;
  rl_schedule.decay_steps = 0;
  rl_schedule.final_lr = rc.lr;

  model::OptimConfig rl_optim = cfg.optim;
  rl_optim.weight_decay = 0.0;  // plain policy gradient, no decay pull

  std::filesystem::create_directories(opts.run_dir);
  const std::filesystem::path metrics_path = opts.run_dir / "metrics.jsonl";
  const bool resuming = opts.resume && state.step > 0;
  metrics::JsonlWriter writer(metrics_path,
                              resuming && std::filesystem::exists(metrics_path));
  std::ofstream rollout_dump;
  if (opts.dump_rollouts) {
    rollout_dump.open(opts.run_dir / "rollouts.jsonl",
                      resuming ? std::ios::app : std::ios::trunc);
  }

  struct Window {
    double reward_sum = 0.0;
    std::int64_t responses = 0;
    double len_sum = 0.0;
    double entropy_sum = 0.0;
    std::int64_t entropy_tokens = 0;
    double nll_sum = 0.0;
    double loss_sum = 0.0;
    std::int64_t updates = 0;
    std::int64_t tokens = 0;
  } window;

  using Clock = std::chrono::steady_clock;
  auto interval_start = Clock::now();

  const std::int64_t n_tasks = static_cast<std::int64_t>(tasks.size());
  while (state.step < rc.steps) {
    const std::int64_t s = state.step + 1;  // 1-based step being computed
    const int max_resp =
        s <= rc.stage1_steps ? rc.max_resp_stage1 : rc.max_resp_stage2;

    RolloutParams rp;
    rp.group_size = rc.group_size;
    rp.temperature = rc.temperature;
    rp.max_response_len = max_resp;

    RngState rollout_rng(derive_seed(cfg.seed, "rl-step-" + std::to_string(s)));

    std::vector<GroupRollout> retained;
    std::vector<nlohmann::json> dump_lines;
    for (int p = 0; p < rc.prompts_per_step; ++p) {
      const std::int64_t flat = (s - 1) * rc.prompts_per_step + p;
      const std::int64_t epoch = flat / n_tasks;
      std::vector<std::int32_t> order(tasks.size());
      std::iota(order.begin(), order.end(), 0);
      RngState order_rng(
          derive_seed(cfg.seed, "rl-order-" + std::to_string(epoch)));
      for (size_t i = order.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(order_rng.next_below(i));
        std::swap(order[i - 1], order[j]);
      }
      const data::TaskInstance& task =
          tasks[static_cast<size_t>(order[static_cast<size_t>(flat % n_tasks)])];

      const std::vector<std::int32_t> prompt = data::encode(task.prompt);
      GroupRollout group;
      try {
        group = rollout_group(state, prompt, rp, rollout_rng);
      } catch (const std::exception& e) {
        result.aborted = true;
        result.abort_reason = e.what();
        return result;
      }
      for (size_t g = 0; g < group.responses.size(); ++g) {
        const std::string text = data::decode(group.responses[g]);
        group.rewards[g] = data::verify(text, task);
        window.reward_sum += group.rewards[g];
        window.len_sum += static_cast<double>(group.responses[g].size());
        window.entropy_sum += group.entropy_sums[g];
        window.entropy_tokens +=
            static_cast<std::int64_t>(group.responses[g].size());
        for (double lp : group.old_logprobs[g]) window.nll_sum -= lp;
        ++window.responses;
      }
      if (opts.dump_rollouts) {
        nlohmann::json line{{"step", s},
                            {"prompt", task.prompt},
                            {"gold", task.gold},
                            {"responses", nlohmann::json::array()}};
        for (size_t g = 0; g < group.responses.size(); ++g) {
          line["responses"].push_back(
              {{"text", data::decode(group.responses[g])},
               {"reward", group.rewards[g]},
               {"tokens", group.responses[g].size()}});
        }
        dump_lines.push_back(std::move(line));
      }
      if (auto adv = group_advantages(group.rewards, rc.adv_mode == "mean_only")) {
        group.advantages = std::move(*adv);
        retained.push_back(std::move(group));
      }
    }

    if (!retained.empty()) {
      const UpdateStats stats =
          grpo_update(state, retained, rc, rl_schedule, rl_optim);
      if (!stats.applied) {
        result.aborted = true;
        result.abort_reason = "non-finite gradient in grpo_update";
        return result;
      }
      window.loss_sum += stats.loss;
      window.tokens += stats.tokens;
      ++window.updates;
    } else {
      // Every group this step was zero-variance; there is no gradient signal
      // but the step still counts (strictly on-policy, no refill).
      state.step += 1;
    }

    if (opts.dump_rollouts) {
      for (const nlohmann::json& line : dump_lines) {
        rollout_dump << line.dump() << "\n";
      }
    }

    if (state.step % rc.eval_interval == 0 || state.step == rc.steps) {
      metrics::MetricsRecord rec;
      rec.phase = "rl";
      rec.step = state.step;
      rec.tokens_seen = window.tokens;
      rec.lr = rc.lr;
      const double mean_nll =
          window.entropy_tokens > 0
              ? window.nll_sum / static_cast<double>(window.entropy_tokens)
              : 0.0;
      rec.ppl = std::exp(mean_nll);  // sampling perplexity of the policy
      rec.ppl_holdout = rec.ppl;
      const double pol_entropy =
          window.entropy_tokens > 0
              ? window.entropy_sum / static_cast<double>(window.entropy_tokens)
              : 0.0;
      rec.mean_entropy = pol_entropy;
      rec.mean_reward =
          window.responses > 0
              ? window.reward_sum / static_cast<double>(window.responses)
              : 0.0;
      rec.accuracy = rec.mean_reward;
      rec.resp_len_mean =
          window.responses > 0
              ? window.len_sum / static_cast<double>(window.responses)
              : 0.0;
      rec.policy_entropy = pol_entropy;
      const double wall_ms = std::chrono::duration<double, std::milli>(
                                 Clock::now() - interval_start)
                                 .count();
      rec.wall_ms = opts.deterministic ? 0.0 : wall_ms;
      writer.write(rec);
      writer.flush();
      result.records.push_back(std::move(rec));
      model::save_checkpoint(opts.run_dir / "ckpt-latest.bin", state);
      window = Window{};
      interval_start = Clock::now();
    }
  }

  model::save_checkpoint(opts.run_dir / "ckpt-rl-final.bin", state);
  return result;
}

}  // namespace rewardforge::rl
