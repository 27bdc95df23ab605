#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rewardforge::data {

// Byte-level tokenizer: ids 0..255 are raw bytes, followed by four special
// tokens at fixed indices. encode() never produces a special id; decode()
// skips specials so generated text can be recovered around stop tokens.
namespace tok {
inline constexpr std::int32_t kPad = 256;
inline constexpr std::int32_t kBos = 257;
inline constexpr std::int32_t kEos = 258;
inline constexpr std::int32_t kSep = 259;
inline constexpr int kVocabSize = 260;

inline bool is_special(std::int32_t id) { return id >= 256 && id < kVocabSize; }
}  // namespace tok

std::vector<std::int32_t> encode(std::string_view text);

// Throws std::out_of_range on ids outside [0, kVocabSize).
std::string decode(std::span<const std::int32_t> tokens);

}  // namespace rewardforge::data
