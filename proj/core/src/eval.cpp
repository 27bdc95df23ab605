#include "rewardforge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rewardforge/numerics.hpp"
#include "rewardforge/tokenizer.hpp"

namespace rewardforge::eval {

std::int32_t nucleus_sample_row(std::span<const double> probs,
                                double temperature, double top_p,
                                RngState& rng) {
  numerics::check_probs(probs);
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("temperature must be > 0");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw std::invalid_argument("top_p must be in (0, 1]");
  }

  // Temperature on a probability row: p^(1/T) renormalized, computed in log
  // space; identical to dividing the logits by T.
  std::vector<double> scaled(probs.size(), 0.0);
  double max_log = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) {
      scaled[i] = std::log(probs[i]) / temperature;
      max_log = std::max(max_log, scaled[i]);
    }
  }
  double sum = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    scaled[i] = probs[i] > 0.0 ? std::exp(scaled[i] - max_log) : 0.0;
    sum += scaled[i];
  }
  for (double& p : scaled) p /= sum;

  std::vector<std::int32_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    if (scaled[static_cast<size_t>(a)] != scaled[static_cast<size_t>(b)]) {
      return scaled[static_cast<size_t>(a)] > scaled[static_cast<size_t>(b)];
    }
    return a < b;
  });

  double cum = 0.0;
  size_t nucleus = order.size();
  for (size_t i = 0; i < order.size(); ++i) {
    cum += scaled[static_cast<size_t>(order[i])];
    if (cum >= top_p) {
      nucleus = i + 1;
      break;
    }
  }

  const double u = rng.next_double() * cum;
  double acc = 0.0;
  for (size_t i = 0; i < nucleus; ++i) {
    acc += scaled[static_cast<size_t>(order[i])];
    if (u < acc) return order[i];
  }
  return order[nucleus - 1];
}

double pass_at_k(int m, int c, int k) {
  if (m < 1 || c < 0 || c > m || k < 1 || k > m) {
    throw std::invalid_argument("pass_at_k requires 0 <= c <= m, 1 <= k <= m");
  }
  if (m - c < k) return 1.0;
  double prod = 1.0;
  for (int i = 0; i < k; ++i) {
    prod *= static_cast<double>(m - c - i) / static_cast<double>(m - i);
  }
  return 1.0 - prod;
}

int cons_at_m(std::span<const std::string> answers, std::string_view gold) {
  if (answers.empty()) throw std::invalid_argument("cons_at_m needs m >= 1");
  std::vector<std::string> canon;
  canon.reserve(answers.size());
  for (const std::string& a : answers) {
    canon.push_back(data::canonicalize_answer(a));
  }
  size_t best = 0;
  int best_count = 0;
  for (size_t i = 0; i < canon.size(); ++i) {
    int count = 0;
    for (size_t j = 0; j < canon.size(); ++j) {
      if (canon[j] == canon[i]) ++count;
    }
    if (count > best_count) {  // strict: earliest occurrence wins ties
      best_count = count;
      best = i;
    }
  }
  return canon[best] == data::canonicalize_answer(gold) ? 1 : 0;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json pass = nlohmann::json::object();
  for (size_t i = 0; i < ks.size(); ++i) {
    pass[std::to_string(ks[i])] = pass_at_k[i];
  }
  nlohmann::json per = nlohmann::json::array();
  for (const TaskResult& t : per_task) {
    nlohmann::json tp = nlohmann::json::object();
    for (size_t i = 0; i < ks.size(); ++i) {
      tp[std::to_string(ks[i])] = t.pass[i];
    }
    per.push_back({{"prompt", t.prompt},
                   {"gold", t.gold},
                   {"m", t.m},
                   {"correct", t.correct},
                   {"cons", t.cons},
                   {"pass_at_k", tp}});
  }
  return nlohmann::json{{"tasks_evaluated", tasks_evaluated},
                        {"tasks_excluded", tasks_excluded},
                        {"m", m},
                        {"avg_at_m", avg_at_m},
                        {"cons_at_m", cons_at_m},
                        {"pass_at_k", pass},
                        {"per_task", per}};
}

EvalReport evaluate(const model::ModelState& state,
                    std::span<const data::TaskInstance> tasks,
                    const SampleSettings& settings, std::span<const int> ks,
                    const std::optional<std::filesystem::path>& raw_dump) {
  if (tasks.empty()) throw std::invalid_argument("evaluate: no tasks");
  if (settings.m < 1) throw std::invalid_argument("evaluate: m must be >= 1");
  for (int k : ks) {
    if (k < 1 || k > settings.m) {
      throw std::invalid_argument("evaluate: every k must be in [1, m]");
    }
  }

  EvalReport report;
  report.m = settings.m;
  report.ks.assign(ks.begin(), ks.end());
  report.pass_at_k.assign(ks.size(), 0.0);

  std::ofstream dump;
  if (raw_dump) {
    dump.open(*raw_dump, std::ios::trunc);
    if (!dump) throw std::runtime_error("cannot write " + raw_dump->string());
  }

  RngState rng(derive_seed(settings.seed, "eval"));
  const int context = state.cfg.context_len;

  for (const data::TaskInstance& task : tasks) {
    const std::vector<std::int32_t> prompt = data::encode(task.prompt);
    if (prompt.empty() || static_cast<int>(prompt.size()) + 1 > context) {
      ++report.tasks_excluded;
      continue;
    }
    const int room = context - static_cast<int>(prompt.size());
    const int max_len = std::min(settings.max_len, room);

    TaskResult tr;
    tr.prompt = task.prompt;
    tr.gold = task.gold;
    tr.m = settings.m;

    std::vector<std::string> extracted;
    nlohmann::json samples = nlohmann::json::array();
    for (int s = 0; s < settings.m; ++s) {
      std::vector<std::int32_t> seq = prompt;
      std::vector<std::int32_t> response;
      while (static_cast<int>(response.size()) < max_len) {
        const std::vector<double> logits = model::last_logits(state, seq);
        const std::vector<double> probs = numerics::softmax(logits);
        const std::int32_t tok = nucleus_sample_row(
            probs, settings.temperature, settings.top_p, rng);
        if (tok == data::tok::kEos || tok == data::tok::kSep) break;
        response.push_back(tok);
        seq.push_back(tok);
      }
      const std::string text = data::decode(response);
      tr.correct += data::verify(text, task);
      extracted.push_back(data::extract_answer(text).value_or(""));
      if (raw_dump) {
        samples.push_back({{"text", text},
                           {"reward", data::verify(text, task)},
                           {"tokens", response.size()}});
      }
    }

    tr.cons = cons_at_m(extracted, task.gold);
    for (size_t i = 0; i < report.ks.size(); ++i) {
      tr.pass.push_back(pass_at_k(settings.m, tr.correct, report.ks[i]));
    }

    report.avg_at_m += static_cast<double>(tr.correct) / settings.m;
    report.cons_at_m += tr.cons;
    for (size_t i = 0; i < report.ks.size(); ++i) {
      report.pass_at_k[i] += tr.pass[i];
    }
    ++report.tasks_evaluated;
    if (raw_dump) {
      dump << nlohmann::json{{"prompt", task.prompt},
                             {"gold", task.gold},
                             {"correct", tr.correct},
                             {"m", settings.m},
                             {"samples", samples}}
                  .dump()
           << "\n";
    }
    report.per_task.push_back(std::move(tr));
  }

  if (report.tasks_evaluated > 0) {
    const double inv = 1.0 / report.tasks_evaluated;
    report.avg_at_m *= inv;
    report.cons_at_m *= inv;
    for (double& p : report.pass_at_k) p *= inv;
  }
  return report;
}

}  // namespace rewardforge::eval
