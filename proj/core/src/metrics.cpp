#include "rewardforge/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace rewardforge::metrics {

nlohmann::json MetricsRecord::to_json() const {
  nlohmann::json j{{"phase", phase},
                   {"step", step},
                   {"tokens_seen", tokens_seen},
                   {"lr", lr},
                   {"ppl", ppl},
                   {"ppl_holdout", ppl_holdout},
                   {"mean_entropy", mean_entropy},
                   {"mean_reward", mean_reward},
                   {"reward_clamp_rate", reward_clamp_rate},
                   {"mass_out_topk", mass_out_topk},
                   {"mass_topk_ex_target", mass_topk_ex_target},
                   {"wall_ms", wall_ms}};
  if (accuracy) j["accuracy"] = *accuracy;
  if (resp_len_mean) j["resp_len_mean"] = *resp_len_mean;
  if (policy_entropy) j["policy_entropy"] = *policy_entropy;
  return j;
}

MetricsRecord MetricsRecord::from_json(const nlohmann::json& j) {
  MetricsRecord r;
  r.phase = j.at("phase").get<std::string>();
  r.step = j.at("step").get<std::int64_t>();
  r.tokens_seen = j.at("tokens_seen").get<std::int64_t>();
  r.lr = j.at("lr").get<double>();
  r.ppl = j.at("ppl").get<double>();
  r.ppl_holdout = j.at("ppl_holdout").get<double>();
  r.mean_entropy = j.at("mean_entropy").get<double>();
  r.mean_reward = j.at("mean_reward").get<double>();
  r.reward_clamp_rate = j.at("reward_clamp_rate").get<double>();
  r.mass_out_topk = j.at("mass_out_topk").get<double>();
  r.mass_topk_ex_target = j.at("mass_topk_ex_target").get<double>();
  r.wall_ms = j.at("wall_ms").get<double>();
  if (j.contains("accuracy")) r.accuracy = j.at("accuracy").get<double>();
  if (j.contains("resp_len_mean")) {
    r.resp_len_mean = j.at("resp_len_mean").get<double>();
  }
  if (j.contains("policy_entropy")) {
    r.policy_entropy = j.at("policy_entropy").get<double>();
  }
  return r;
}

void validate_record(const nlohmann::json& j, int vocab_size) {
  static const char* kRequired[] = {
      "phase",       "step",        "tokens_seen",
      "lr",          "ppl",         "ppl_holdout",
      "mean_entropy", "mean_reward", "reward_clamp_rate",
      "mass_out_topk", "mass_topk_ex_target", "wall_ms"};
  for (const char* key : kRequired) {
    if (!j.contains(key)) {
      throw std::runtime_error(std::string("metrics record missing ") + key);
    }
  }
  const std::string phase = j.at("phase").get<std::string>();
  if (phase != "pretrain" && phase != "midtrain" && phase != "rl" &&
      phase != "eval") {
    throw std::runtime_error("metrics record has unknown phase " + phase);
  }
  if (j.at("step").get<std::int64_t>() < 0) {
    throw std::runtime_error("metrics record step < 0");
  }
  if (j.at("ppl").get<double>() < 1.0 ||
      j.at("ppl_holdout").get<double>() < 1.0) {
    throw std::runtime_error("metrics record ppl < 1");
  }
  const double h = j.at("mean_entropy").get<double>();
  if (h < 0.0 || h > std::log(static_cast<double>(vocab_size)) + 1e-9) {
    throw std::runtime_error("metrics record entropy outside [0, ln V]");
  }
  const double clamp = j.at("reward_clamp_rate").get<double>();
  if (clamp < 0.0 || clamp > 1.0) {
    throw std::runtime_error("metrics record clamp rate outside [0, 1]");
  }
  if (phase == "rl") {
    for (const char* key : {"accuracy", "resp_len_mean", "policy_entropy"}) {
      if (!j.contains(key)) {
        throw std::runtime_error(std::string("rl record missing ") + key);
      }
    }
  }
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path, bool append)
    : os_(path, append ? (std::ios::binary | std::ios::app)
                       : (std::ios::binary | std::ios::trunc)) {
  if (!os_) throw std::runtime_error("cannot open " + path.string());
}

void JsonlWriter::write(const MetricsRecord& record) {
  os_ << record.to_json().dump() << "\n";
}

void JsonlWriter::flush() { os_.flush(); }

std::vector<MetricsRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<MetricsRecord> records;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    records.push_back(MetricsRecord::from_json(nlohmann::json::parse(line)));
  }
  return records;
}

}  // namespace rewardforge::metrics
