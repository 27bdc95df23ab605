#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace rewardforge::data {

// Synthetic corpus generators. Every family is a pure function of
// (params, seed): regenerating from the manifest reproduces the byte
// stream exactly.
//
// Families:
//   markov   k-order Markov text over a small alphabet. Each context has a
//            dominant next symbol with probability `peak`; the rest of the
//            mass is uniform, so the entropy rate is tunable from ~0
//            (peak ~ 1) up to ln(alphabet).
//            params: alphabet (2..26), order (>= 1), peak [0,1],
//                    doc_len, docs
//   addition integer Q/A lines "a+b=c".
//            params: min_operand, max_operand, docs
//   modadd   integer Q/A lines "a+b mod m=c".
//            params: min_operand, max_operand, mod (> 1), docs
//   pattern  cyclic repetition of a fixed pattern string; a deterministic
//            grammar with entropy rate ~ 0.
//            params: pattern (non-empty), doc_len, docs
//   copy     lines "s=s" for random lowercase strings s.
//            params: min_len, max_len, docs
struct GeneratorParams {
  // markov
  int alphabet = 8;
  int order = 1;
  double peak = 0.6;
  int doc_len = 256;
  // arithmetic
  int min_operand = 0;
  int max_operand = 9;
  int mod = 0;
  // pattern
  std::string pattern = "abc";
  // copy
  int min_len = 2;
  int max_len = 8;
  // shared
  int docs = 200;

  nlohmann::json to_json(const std::string& family) const;
  static GeneratorParams from_json(const nlohmann::json& j);
};

struct Corpus {
  std::vector<std::string> documents;
  nlohmann::json manifest;
};

Corpus gen_corpus(const std::string& family, const GeneratorParams& params,
                  std::uint64_t seed);

// One document per line, newlines inside documents escaped as "\n" (and
// backslashes as "\\"). The manifest goes next to it as
// "<stem>.manifest.json" with an fnv1a64 integrity field over the txt bytes.
void save_corpus(const Corpus& corpus, const std::filesystem::path& txt_path);
Corpus load_corpus(const std::filesystem::path& txt_path);

std::string escape_document(const std::string& doc);
std::string unescape_document(const std::string& line);

}  // namespace rewardforge::data
