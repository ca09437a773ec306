#include "g2p/lexicon.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "g2p/error.h"
#include "g2p/rng.h"
#include "g2p/utf8.h"

namespace g2p {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::string normalize_word(std::string_view word) {
  std::u32string cps = utf8::decode(word);
  auto space = [](char32_t cp) { return cp == U' ' || cp == U'\t' || cp == U'\r' || cp == U'\n'; };
  std::size_t begin = 0, end = cps.size();
  while (begin < end && space(cps[begin])) ++begin;
  while (end > begin && space(cps[end - 1])) --end;
  if (begin == end) throw InvalidArgument("word is empty after normalization");
  std::u32string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (space(cps[i])) throw InvalidArgument("word contains whitespace");
    out.push_back(utf8::to_upper(cps[i]));
  }
  return utf8::encode(out);
}

Lexicon parse_lexicon(std::istream& in) {
  Lexicon lex;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      utf8::decode(line);
    } catch (const DecodeError& e) {
      throw DecodeError("line " + std::to_string(lineno) + ": " + e.what());
    }
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields[0].starts_with("#") || fields[0].starts_with(";;;")) continue;
    if (fields.size() < 2) throw ParseError(lineno, "word without phonemes");

    LexiconEntry entry;
    entry.word = normalize_word(fields[0]);
    for (std::size_t k = 1; k < fields.size(); ++k) entry.phonemes.emplace_back(fields[k]);
    if (seen.insert(entry.word).second) {
      lex.entries.push_back(std::move(entry));
    } else {
      lex.alternates.push_back(std::move(entry));
    }
  }
  return lex;
}

Lexicon parse_lexicon_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_lexicon(in);
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open lexicon: " + path.string());
  return parse_lexicon(in);
}

std::vector<std::string> graphemes_of(std::string_view word) {
  std::vector<std::string> out;
  for (char32_t cp : utf8::decode(word)) out.push_back(utf8::encode(cp));
  return out;
}

// Vocabulary

const std::vector<std::string>& Vocabulary::reserved_tokens() {
  static const std::vector<std::string> tokens = {"<pad>", "<s>", "</s>", "<unk>"};
  return tokens;
}

Vocabulary::Vocabulary() {
  for (const auto& t : reserved_tokens()) add(t);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  const auto& reserved = reserved_tokens();
  if (tokens.size() < reserved.size() ||
      !std::equal(reserved.begin(), reserved.end(), tokens.begin()))
    throw InvalidArgument("vocabulary must start with the reserved tokens");
  Vocabulary v;
  for (std::size_t i = reserved.size(); i < tokens.size(); ++i) {
    if (v.find(tokens[i])) throw InvalidArgument("duplicate vocabulary token: " + tokens[i]);
    v.add(tokens[i]);
  }
  return v;
}

int Vocabulary::add(const std::string& token) {
  auto [it, inserted] = index_.try_emplace(token, size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id_or_unk(std::string_view token) const { return find(token).value_or(kUnk); }

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw InvalidArgument("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

Vocabs build_vocabs(std::span<const LexiconEntry> entries) {
  if (entries.empty()) throw InvalidArgument("cannot build vocabularies from an empty lexicon");
  Vocabs v;
  for (const auto& e : entries) {
    for (const auto& g : graphemes_of(e.word)) v.graphemes.add(g);
    for (const auto& p : e.phonemes) v.phonemes.add(p);
  }
  return v;
}

namespace {

int lookup(const Vocabulary& vocab, std::string_view token, bool strict, const char* kind) {
  if (auto id = vocab.find(token)) return *id;
  if (strict) throw InvalidArgument(std::string("unknown ") + kind + ": " + std::string(token));
  return Vocabulary::kUnk;
}

}  // namespace

std::vector<int> encode_word(std::string_view word, const Vocabulary& graphemes, bool strict) {
  std::vector<int> ids;
  for (const auto& g : graphemes_of(normalize_word(word)))
    ids.push_back(lookup(graphemes, g, strict, "grapheme"));
  ids.push_back(Vocabulary::kEos);
  return ids;
}

EncodedEntry encode_entry(const LexiconEntry& entry, const Vocabs& vocabs, bool strict) {
  EncodedEntry out;
  out.input = encode_word(entry.word, vocabs.graphemes, strict);
  out.target.reserve(entry.phonemes.size() + 2);
  out.target.push_back(Vocabulary::kSos);
  for (const auto& p : entry.phonemes) out.target.push_back(lookup(vocabs.phonemes, p, strict, "phoneme"));
  out.target.push_back(Vocabulary::kEos);
  return out;
}

// Splits

SplitSizes split_sizes(std::size_t n) {
  const auto train = static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(n)));
  const auto validation = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
  return {train, validation, n - train - validation};
}

std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Lcg64 rng(seed);
  shuffle(order, rng);
  return order;
}

DatasetSplit split_dataset(std::span<const LexiconEntry> entries, std::uint64_t seed) {
  const std::size_t n = entries.size();
  if (n < 10) throw InvalidArgument("dataset split needs at least 10 entries, got " + std::to_string(n));
  const auto sizes = split_sizes(n);
  const auto order = split_permutation(n, seed);
  DatasetSplit split;
  split.seed = seed;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& e = entries[order[k]];
    if (k < sizes.train) {
      split.train.push_back(e);
    } else if (k < sizes.train + sizes.validation) {
      split.validation.push_back(e);
    } else {
      split.test.push_back(e);
    }
  }
  return split;
}

}  // namespace g2p
