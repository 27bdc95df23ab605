#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rewardforge/corpus.hpp"

namespace rewardforge::data {

// A verifiable prompt/answer pair. The gold answer is checked by exact
// string comparison after canonicalization, so every instance is its own
// verifier.
struct TaskInstance {
  std::string prompt;
  std::string gold;
  std::string family;
};

// Task sets mirror the corpus families that have a Q/A structure (addition,
// modadd, copy): prompts are the text up to and including '=', gold is the
// remainder. Deterministic in (family, params, seed).
std::vector<TaskInstance> gen_tasks(const std::string& family,
                                    const GeneratorParams& params,
                                    std::uint64_t seed, int count);

// Trim whitespace; integer-looking strings additionally lose leading zeros
// and a redundant '+' sign (" 042 " and "42" compare equal).
std::string canonicalize_answer(std::string_view answer);

// First answer-like token of a model response: the prefix up to the first
// character that cannot continue an answer. Returns nullopt when the
// response starts with no extractable content.
std::optional<std::string> extract_answer(std::string_view response_text);

// 1 iff the canonicalized extracted answer equals the canonicalized gold.
// Unextractable answers verify as 0 rather than raising.
int verify(std::string_view response_text, const TaskInstance& task);

}  // namespace rewardforge::data
