#include "rewardforge/config.hpp"

#include <cmath>
#include <fstream>

namespace rewardforge::config {

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) {
    throw ConfigError("config section '" + where + "' must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown key '" + key + "' in config section '" +
                        where + "'");
    }
  }
}

template <typename T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

nlohmann::json task_set_to_json(const TaskSetConfig& t) {
  return {{"family", t.family},
          {"params", t.params.to_json(t.family)},
          {"seed", t.seed},
          {"count", t.count}};
}

TaskSetConfig task_set_from_json(const nlohmann::json& j,
                                 const std::string& where) {
  check_keys(j, {"family", "params", "seed", "count"}, where);
  TaskSetConfig t;
  get_if(j, "family", t.family);
  get_if(j, "seed", t.seed);
  get_if(j, "count", t.count);
  if (j.contains("params")) {
    // The family's own serialization defines its legal keys.
    const nlohmann::json reference =
        data::GeneratorParams{}.to_json(t.family);
    for (const auto& [key, value] : j.at("params").items()) {
      if (!reference.contains(key)) {
        throw ConfigError("unknown key '" + key + "' in " + where +
                          ".params for family " + t.family);
      }
    }
    t.params = data::GeneratorParams::from_json(j.at("params"));
  }
  return t;
}

}  // namespace

int desk_top_k(int vocab_size) {
  return std::max(2, static_cast<int>(std::lround(0.004 * vocab_size)));
}

void RlConfig::validate() const {
  if (group_size < 2) throw ConfigError("rl.group_size must be >= 2");
  if (prompts_per_step < 1) throw ConfigError("rl.prompts_per_step must be >= 1");
  if (steps < 0) throw ConfigError("rl.steps must be >= 0");
  if (!(temperature > 0.0)) throw ConfigError("rl.temperature must be > 0");
  if (!(eps_low > 0.0 && eps_low <= eps_high && eps_high < 1.0)) {
    throw ConfigError("rl clip range must satisfy 0 < eps_low <= eps_high < 1");
  }
  if (adv_mode != "mean_std" && adv_mode != "mean_only") {
    throw ConfigError("rl.adv_mode must be mean_std or mean_only");
  }
}

void EvalConfig::validate() const {
  if (m < 1) throw ConfigError("eval.m must be >= 1");
  if (!(temperature > 0.0)) throw ConfigError("eval.temperature must be > 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw ConfigError("eval.top_p must be in (0, 1]");
  }
  for (int k : ks) {
    if (k < 1 || k > m) throw ConfigError("eval.ks entries must be in [1, m]");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  return nlohmann::json{
      {"seed", seed},
      {"out_root", out_root},
      {"model",
       {{"vocab_size", model.vocab_size},
        {"context_len", model.context_len},
        {"n_layer", model.n_layer},
        {"d_model", model.d_model},
        {"n_head", model.n_head},
        {"d_ff", model.d_ff},
        {"tie_output", model.tie_output},
        {"rope", model.rope},
        {"embed_init_std", model.embed_init_std}}},
      {"reward",
       {{"beta", reward.beta},
        {"lambda_top", reward.lambda_top},
        {"lambda_tail", reward.lambda_tail},
        {"top_k", reward.k}}},
      {"schedule",
       {{"peak_lr", schedule.peak_lr},
        {"warmup_steps", schedule.warmup_steps},
        {"stable_steps", schedule.stable_steps},
        {"decay_steps", schedule.decay_steps},
        {"final_lr", schedule.final_lr}}},
      {"optim",
       {{"weight_decay", optim.weight_decay},
        {"beta1", optim.beta1},
        {"beta2", optim.beta2},
        {"eps", optim.eps},
        {"grad_clip", optim.grad_clip},
        {"decay_vectors", optim.decay_vectors}}},
      {"data",
       {{"pretrain_corpus", data.pretrain_corpus},
        {"midtrain_corpus", data.midtrain_corpus},
        {"holdout_fraction", data.holdout_fraction},
        {"batch_size", data.batch_size},
        {"holdout_batches", data.holdout_batches}}},
      {"pretrain",
       {{"steps", pretrain.steps}, {"eval_interval", pretrain.eval_interval}}},
      {"midtrain",
       {{"steps", midtrain.steps}, {"eval_interval", midtrain.eval_interval}}},
      {"rl",
       {{"group_size", rl.group_size},
        {"prompts_per_step", rl.prompts_per_step},
        {"steps", rl.steps},
        {"stage1_steps", rl.stage1_steps},
        {"max_resp_stage1", rl.max_resp_stage1},
        {"max_resp_stage2", rl.max_resp_stage2},
        {"temperature", rl.temperature},
        {"eps_low", rl.eps_low},
        {"eps_high", rl.eps_high},
        {"lr", rl.lr},
        {"adv_mode", rl.adv_mode},
        {"eval_interval", rl.eval_interval},
        {"tasks", task_set_to_json(rl.tasks)}}},
      {"eval",
       {{"m", eval.m},
        {"temperature", eval.temperature},
        {"top_p", eval.top_p},
        {"max_len", eval.max_len},
        {"ks", eval.ks},
        {"tasks", task_set_to_json(eval.tasks)}}},
      {"sweep",
       {{"rewards",
         [&] {
           nlohmann::json arr = nlohmann::json::array();
           for (const reward::RewardConfig& r : sweep.rewards) {
             arr.push_back({{"beta", r.beta},
                            {"lambda_top", r.lambda_top},
                            {"lambda_tail", r.lambda_tail},
                            {"top_k", r.k}});
           }
           return arr;
         }()},
        {"seeds", sweep.seeds},
        {"run_eval", sweep.run_eval}}}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  check_keys(j,
             {"seed", "out_root", "model", "reward", "schedule", "optim",
              "data", "pretrain", "midtrain", "rl", "eval", "sweep"},
             "<root>");
  ExperimentConfig cfg;
  get_if(j, "seed", cfg.seed);
  get_if(j, "out_root", cfg.out_root);

  if (j.contains("model")) {
    const nlohmann::json& m = j.at("model");
    check_keys(m,
               {"vocab_size", "context_len", "n_layer", "d_model", "n_head",
                "d_ff", "tie_output", "rope", "embed_init_std"},
               "model");
    get_if(m, "vocab_size", cfg.model.vocab_size);
    get_if(m, "context_len", cfg.model.context_len);
    get_if(m, "n_layer", cfg.model.n_layer);
    get_if(m, "d_model", cfg.model.d_model);
    get_if(m, "n_head", cfg.model.n_head);
    get_if(m, "d_ff", cfg.model.d_ff);
    get_if(m, "tie_output", cfg.model.tie_output);
    get_if(m, "rope", cfg.model.rope);
    get_if(m, "embed_init_std", cfg.model.embed_init_std);
  }
  if (j.contains("reward")) {
    const nlohmann::json& r = j.at("reward");
    check_keys(r, {"beta", "lambda_top", "lambda_tail", "top_k"}, "reward");
    get_if(r, "beta", cfg.reward.beta);
    get_if(r, "lambda_top", cfg.reward.lambda_top);
    get_if(r, "lambda_tail", cfg.reward.lambda_tail);
    get_if(r, "top_k", cfg.reward.k);
  }
  if (j.contains("schedule")) {
    const nlohmann::json& s = j.at("schedule");
    check_keys(s,
               {"peak_lr", "warmup_steps", "stable_steps", "decay_steps",
                "final_lr"},
               "schedule");
    get_if(s, "peak_lr", cfg.schedule.peak_lr);
    get_if(s, "warmup_steps", cfg.schedule.warmup_steps);
    get_if(s, "stable_steps", cfg.schedule.stable_steps);
    get_if(s, "decay_steps", cfg.schedule.decay_steps);
    get_if(s, "final_lr", cfg.schedule.final_lr);
  }
  if (j.contains("optim")) {
    const nlohmann::json& o = j.at("optim");
    check_keys(o,
               {"weight_decay", "beta1", "beta2", "eps", "grad_clip",
                "decay_vectors"},
               "optim");
    get_if(o, "weight_decay", cfg.optim.weight_decay);
    get_if(o, "beta1", cfg.optim.beta1);
    get_if(o, "beta2", cfg.optim.beta2);
    get_if(o, "eps", cfg.optim.eps);
    get_if(o, "grad_clip", cfg.optim.grad_clip);
    get_if(o, "decay_vectors", cfg.optim.decay_vectors);
  }
  if (j.contains("data")) {
    const nlohmann::json& d = j.at("data");
    check_keys(d,
               {"pretrain_corpus", "midtrain_corpus", "holdout_fraction",
                "batch_size", "holdout_batches"},
               "data");
    get_if(d, "pretrain_corpus", cfg.data.pretrain_corpus);
    get_if(d, "midtrain_corpus", cfg.data.midtrain_corpus);
    get_if(d, "holdout_fraction", cfg.data.holdout_fraction);
    get_if(d, "batch_size", cfg.data.batch_size);
    get_if(d, "holdout_batches", cfg.data.holdout_batches);
  }
  for (const char* phase : {"pretrain", "midtrain"}) {
    if (!j.contains(phase)) continue;
    const nlohmann::json& p = j.at(phase);
    check_keys(p, {"steps", "eval_interval"}, phase);
    PhaseConfig& dst =
        std::string(phase) == "pretrain" ? cfg.pretrain : cfg.midtrain;
    get_if(p, "steps", dst.steps);
    get_if(p, "eval_interval", dst.eval_interval);
  }
  if (j.contains("rl")) {
    const nlohmann::json& r = j.at("rl");
    check_keys(r,
               {"group_size", "prompts_per_step", "steps", "stage1_steps",
                "max_resp_stage1", "max_resp_stage2", "temperature", "eps_low",
                "eps_high", "lr", "adv_mode", "eval_interval", "tasks"},
               "rl");
    get_if(r, "group_size", cfg.rl.group_size);
    get_if(r, "prompts_per_step", cfg.rl.prompts_per_step);
    get_if(r, "steps", cfg.rl.steps);
    get_if(r, "stage1_steps", cfg.rl.stage1_steps);
    get_if(r, "max_resp_stage1", cfg.rl.max_resp_stage1);
    get_if(r, "max_resp_stage2", cfg.rl.max_resp_stage2);
    get_if(r, "temperature", cfg.rl.temperature);
    get_if(r, "eps_low", cfg.rl.eps_low);
    get_if(r, "eps_high", cfg.rl.eps_high);
    get_if(r, "lr", cfg.rl.lr);
    get_if(r, "adv_mode", cfg.rl.adv_mode);
    get_if(r, "eval_interval", cfg.rl.eval_interval);
    if (r.contains("tasks")) {
      cfg.rl.tasks = task_set_from_json(r.at("tasks"), "rl.tasks");
    }
  }
  if (j.contains("eval")) {
    const nlohmann::json& e = j.at("eval");
    check_keys(e, {"m", "temperature", "top_p", "max_len", "ks", "tasks"},
               "eval");
    get_if(e, "m", cfg.eval.m);
    get_if(e, "temperature", cfg.eval.temperature);
    get_if(e, "top_p", cfg.eval.top_p);
    get_if(e, "max_len", cfg.eval.max_len);
    if (e.contains("ks")) cfg.eval.ks = e.at("ks").get<std::vector<int>>();
    if (e.contains("tasks")) {
      cfg.eval.tasks = task_set_from_json(e.at("tasks"), "eval.tasks");
    }
  }
  if (j.contains("sweep")) {
    const nlohmann::json& s = j.at("sweep");
    check_keys(s, {"rewards", "seeds", "run_eval"}, "sweep");
    if (s.contains("rewards")) {
      for (const nlohmann::json& r : s.at("rewards")) {
        check_keys(r, {"beta", "lambda_top", "lambda_tail", "top_k"},
                   "sweep.rewards[]");
        reward::RewardConfig rc = cfg.reward;
        get_if(r, "beta", rc.beta);
        get_if(r, "lambda_top", rc.lambda_top);
        get_if(r, "lambda_tail", rc.lambda_tail);
        get_if(r, "top_k", rc.k);
        cfg.sweep.rewards.push_back(rc);
      }
    }
    if (s.contains("seeds")) {
      cfg.sweep.seeds = s.at("seeds").get<std::vector<std::uint64_t>>();
    }
    get_if(s, "run_eval", cfg.sweep.run_eval);
  }
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  if (reward.k < 1 || reward.k > model.vocab_size) {
    throw ConfigError("reward.top_k must be in [1, vocab_size]");
  }
  if (pretrain.steps < 1) throw ConfigError("pretrain.steps must be >= 1");
  if (pretrain.eval_interval < 1 || midtrain.eval_interval < 1) {
    throw ConfigError("eval_interval must be >= 1");
  }
  if (midtrain.steps < 0) throw ConfigError("midtrain.steps must be >= 0");
  if (data.batch_size < 1) throw ConfigError("data.batch_size must be >= 1");
  if (data.holdout_fraction < 0.0 || data.holdout_fraction >= 1.0) {
    throw ConfigError("data.holdout_fraction must be in [0, 1)");
  }
  rl.validate();
  eval.validate();
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingDependency("config file not found: " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return from_json(j);
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << to_json().dump(2) << "\n";
}

}  // namespace rewardforge::config
