#include "rewardforge/tasks.hpp"

#include <cctype>
#include <stdexcept>

#include "rewardforge/rng.hpp"

namespace rewardforge::data {

namespace {

bool is_integer_literal(std::string_view s) {
  if (s.empty()) return false;
  size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace

std::vector<TaskInstance> gen_tasks(const std::string& family,
                                    const GeneratorParams& params,
                                    std::uint64_t seed, int count) {
  if (family != "addition" && family != "modadd" && family != "copy") {
    throw std::invalid_argument(
        "task family must be addition, modadd, or copy");
  }
  if (count < 1) throw std::invalid_argument("task count must be >= 1");

  GeneratorParams p = params;
  p.docs = count;
  const Corpus corpus = gen_corpus(family, p, derive_seed(seed, "tasks"));

  std::vector<TaskInstance> tasks;
  tasks.reserve(static_cast<size_t>(count));
  for (const std::string& doc : corpus.documents) {
    const size_t eq = doc.rfind('=');
    if (eq == std::string::npos || eq + 1 >= doc.size()) {
      throw std::runtime_error("generator produced a non-Q/A document");
    }
    TaskInstance task;
    task.prompt = doc.substr(0, eq + 1);
    task.gold = doc.substr(eq + 1);
    task.family = family;
    tasks.push_back(std::move(task));
  }
  return tasks;
}

std::string canonicalize_answer(std::string_view answer) {
  size_t begin = 0;
  size_t end = answer.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(answer[begin]))) {
    ++begin;
  }
  while (end > begin && std::isspace(static_cast<unsigned char>(answer[end - 1]))) {
    --end;
  }
  std::string s(answer.substr(begin, end - begin));
  if (!is_integer_literal(s)) return s;

  const bool negative = s[0] == '-';
  size_t digits = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  while (digits + 1 < s.size() && s[digits] == '0') ++digits;
  std::string out = s.substr(digits);
  if (out == "0") return out;
  return negative ? "-" + out : out;
}

std::optional<std::string> extract_answer(std::string_view response_text) {
  size_t i = 0;
  while (i < response_text.size() &&
         std::isspace(static_cast<unsigned char>(response_text[i]))) {
    ++i;
  }
  size_t begin = i;
  if (i < response_text.size() && response_text[i] == '-') ++i;
  while (i < response_text.size() &&
         std::isalnum(static_cast<unsigned char>(response_text[i]))) {
    ++i;
  }
  if (i == begin || (i == begin + 1 && response_text[begin] == '-')) {
    return std::nullopt;
  }
  return std::string(response_text.substr(begin, i - begin));
}

int verify(std::string_view response_text, const TaskInstance& task) {
  const std::optional<std::string> answer = extract_answer(response_text);
  if (!answer) return 0;
  return canonicalize_answer(*answer) == canonicalize_answer(task.gold) ? 1 : 0;
}

}  // namespace rewardforge::data
