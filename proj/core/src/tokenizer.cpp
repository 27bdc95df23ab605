#include "rewardforge/tokenizer.hpp"

#include <stdexcept>

namespace rewardforge::data {

std::vector<std::int32_t> encode(std::string_view text) {
  std::vector<std::int32_t> out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(static_cast<std::int32_t>(c));
  return out;
}

std::string decode(std::span<const std::int32_t> tokens) {
  std::string out;
  out.reserve(tokens.size());
  for (std::int32_t id : tokens) {
    if (id < 0 || id >= tok::kVocabSize) {
      throw std::out_of_range("decode: token id out of range");
    }
    if (tok::is_special(id)) continue;
    out.push_back(static_cast<char>(static_cast<unsigned char>(id)));
  }
  return out;
}

}  // namespace rewardforge::data
