#include "rewardforge/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rewardforge/rng.hpp"

namespace rewardforge::data {

namespace {

constexpr int kSchemaVersion = 1;

std::string gen_markov_doc(const GeneratorParams& p, RngState& rng) {
  const int a = p.alphabet;
  // Context -> dominant next symbol, assigned by hashing so the table never
  // has to be materialized for large orders.
  const auto dominant_for = [&](std::uint64_t ctx_code) {
    return static_cast<int>(rewardforge::fnv1a64(std::string(
               reinterpret_cast<const char*>(&ctx_code), 8)) %
           static_cast<std::uint64_t>(a));
  };

  std::string doc;
  doc.reserve(static_cast<size_t>(p.doc_len));
  std::uint64_t ctx_code = 0;
  std::uint64_t ctx_mod = 1;
  for (int i = 0; i < p.order; ++i) {
    ctx_mod *= static_cast<std::uint64_t>(a);
  }
  for (int i = 0; i < p.order; ++i) {
    const int sym = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(a)));
    doc.push_back(static_cast<char>('a' + sym));
    ctx_code = (ctx_code * static_cast<std::uint64_t>(a) +
                static_cast<std::uint64_t>(sym)) %
               ctx_mod;
  }
  while (static_cast<int>(doc.size()) < p.doc_len) {
    const int dom = dominant_for(ctx_code);
    const double u = rng.next_double();
    int sym;
    if (u < p.peak || a == 1) {
      sym = dom;
    } else {
      // Uniform over the a-1 non-dominant symbols.
      const double r = (u - p.peak) / (1.0 - p.peak);
      int pick = static_cast<int>(r * (a - 1));
      if (pick >= a - 1) pick = a - 2;
      sym = pick >= dom ? pick + 1 : pick;
    }
    doc.push_back(static_cast<char>('a' + sym));
    ctx_code = (ctx_code * static_cast<std::uint64_t>(a) +
                static_cast<std::uint64_t>(sym)) %
               ctx_mod;
  }
  return doc;
}

std::string gen_arithmetic_doc(const GeneratorParams& p, bool modular,
                                RngState& rng) {
  const std::uint64_t span =
      static_cast<std::uint64_t>(p.max_operand - p.min_operand + 1);
  const long long a = p.min_operand + static_cast<long long>(rng.next_below(span));
  const long long b = p.min_operand + static_cast<long long>(rng.next_below(span));
  std::ostringstream os;
  if (modular) {
    const long long c = ((a + b) % p.mod + p.mod) % p.mod;
    os << a << "+" << b << " mod " << p.mod << "=" << c;
  } else {
    os << a << "+" << b << "=" << a + b;
  }
  return os.str();
}

std::string gen_pattern_doc(const GeneratorParams& p) {
  std::string doc;
  doc.reserve(static_cast<size_t>(p.doc_len));
  while (static_cast<int>(doc.size()) < p.doc_len) {
    doc += p.pattern;
  }
  doc.resize(static_cast<size_t>(p.doc_len));
  return doc;
}

std::string gen_copy_doc(const GeneratorParams& p, RngState& rng) {
  const std::uint64_t span =
      static_cast<std::uint64_t>(p.max_len - p.min_len + 1);
  const int len = p.min_len + static_cast<int>(rng.next_below(span));
  std::string s;
  s.reserve(static_cast<size_t>(len));
  for (int i = 0; i < len; ++i) {
    s.push_back(static_cast<char>('a' + rng.next_below(26)));
  }
  return s + "=" + s;
}

}  // namespace

nlohmann::json GeneratorParams::to_json(const std::string& family) const {
  nlohmann::json j;
  if (family == "markov") {
    j = {{"alphabet", alphabet}, {"order", order},   {"peak", peak},
         {"doc_len", doc_len},   {"docs", docs}};
  } else if (family == "addition") {
    j = {{"min_operand", min_operand},
         {"max_operand", max_operand},
         {"docs", docs}};
  } else if (family == "modadd") {
    j = {{"min_operand", min_operand},
         {"max_operand", max_operand},
         {"mod", mod},
         {"docs", docs}};
  } else if (family == "pattern") {
    j = {{"pattern", pattern}, {"doc_len", doc_len}, {"docs", docs}};
  } else if (family == "copy") {
    j = {{"min_len", min_len}, {"max_len", max_len}, {"docs", docs}};
  } else {
    throw std::invalid_argument("unknown corpus family: " + family);
  }
  return j;
}

GeneratorParams GeneratorParams::from_json(const nlohmann::json& j) {
  GeneratorParams p;
  if (j.contains("alphabet")) p.alphabet = j.at("alphabet").get<int>();
  if (j.contains("order")) p.order = j.at("order").get<int>();
  if (j.contains("peak")) p.peak = j.at("peak").get<double>();
  if (j.contains("doc_len")) p.doc_len = j.at("doc_len").get<int>();
  if (j.contains("min_operand")) p.min_operand = j.at("min_operand").get<int>();
  if (j.contains("max_operand")) p.max_operand = j.at("max_operand").get<int>();
  if (j.contains("mod")) p.mod = j.at("mod").get<int>();
  if (j.contains("pattern")) p.pattern = j.at("pattern").get<std::string>();
  if (j.contains("min_len")) p.min_len = j.at("min_len").get<int>();
  if (j.contains("max_len")) p.max_len = j.at("max_len").get<int>();
  if (j.contains("docs")) p.docs = j.at("docs").get<int>();
  return p;
}

Corpus gen_corpus(const std::string& family, const GeneratorParams& p,
                  std::uint64_t seed) {
  if (family == "markov") {
    if (p.alphabet < 2 || p.alphabet > 26 || p.order < 1 || p.peak < 0.0 ||
        p.peak > 1.0 || p.doc_len < p.order || p.docs < 1) {
      throw std::invalid_argument("invalid markov params");
    }
  } else if (family == "addition") {
    if (p.max_operand < p.min_operand || p.docs < 1) {
      throw std::invalid_argument("invalid addition params");
    }
  } else if (family == "modadd") {
    if (p.max_operand < p.min_operand || p.mod < 2 || p.docs < 1) {
      throw std::invalid_argument("invalid modadd params");
    }
  } else if (family == "pattern") {
    if (p.pattern.empty() || p.doc_len < 1 || p.docs < 1) {
      throw std::invalid_argument("invalid pattern params");
    }
  } else if (family == "copy") {
    if (p.min_len < 1 || p.max_len < p.min_len || p.docs < 1) {
      throw std::invalid_argument("invalid copy params");
    }
  } else {
    throw std::invalid_argument("unknown corpus family: " + family);
  }

  Corpus corpus;
  corpus.documents.reserve(static_cast<size_t>(p.docs));
  RngState rng(derive_seed(seed, "corpus-" + family));
  for (int i = 0; i < p.docs; ++i) {
    if (family == "markov") {
      corpus.documents.push_back(gen_markov_doc(p, rng));
    } else if (family == "addition" || family == "modadd") {
      corpus.documents.push_back(gen_arithmetic_doc(p, family == "modadd", rng));
    } else if (family == "pattern") {
      corpus.documents.push_back(gen_pattern_doc(p));
    } else {
      corpus.documents.push_back(gen_copy_doc(p, rng));
    }
  }

  corpus.manifest = {{"schema_version", kSchemaVersion},
                     {"generator", family},
                     {"params", p.to_json(family)},
                     {"doc_count", p.docs},
                     {"seed", seed}};
  return corpus;
}

std::string escape_document(const std::string& doc) {
  std::string out;
  out.reserve(doc.size());
  for (char c : doc) {
    if (c == '\\') {
      out += "\\\\";
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string unescape_document(const std::string& line) {
  std::string out;
  out.reserve(line.size());
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && i + 1 < line.size()) {
      ++i;
      out.push_back(line[i] == 'n' ? '\n' : line[i]);
    } else {
      out.push_back(line[i]);
    }
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& txt_path) {
  std::string payload;
  for (const std::string& doc : corpus.documents) {
    payload += escape_document(doc);
    payload += '\n';
  }
  {
    std::ofstream os(txt_path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + txt_path.string());
    os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
  nlohmann::json manifest = corpus.manifest;
  manifest["fnv1a64"] = rewardforge::fnv1a64(payload);
  manifest["byte_count"] = payload.size();

  std::filesystem::path manifest_path = txt_path;
  manifest_path.replace_extension(".manifest.json");
  std::ofstream ms(manifest_path, std::ios::binary | std::ios::trunc);
  if (!ms) throw std::runtime_error("cannot write " + manifest_path.string());
  ms << manifest.dump(2) << "\n";
}

Corpus load_corpus(const std::filesystem::path& txt_path) {
  std::ifstream is(txt_path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + txt_path.string());
  Corpus corpus;
  std::string line;
  while (std::getline(is, line)) {
    corpus.documents.push_back(unescape_document(line));
  }
  std::filesystem::path manifest_path = txt_path;
  manifest_path.replace_extension(".manifest.json");
  if (std::filesystem::exists(manifest_path)) {
    std::ifstream ms(manifest_path);
    ms >> corpus.manifest;
  }
  return corpus;
}

}  // namespace rewardforge::data
