#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace g2p {

struct LexiconEntry {
  std::string word;  // uppercased, UTF-8
  std::vector<std::string> phonemes;

  bool operator==(const LexiconEntry&) const = default;
};

struct Lexicon {
  std::vector<LexiconEntry> entries;
  // Later pronunciations of repeated words, in file order. Not used for
  // training.
  std::vector<LexiconEntry> alternates;
};

// Reads "WORD PH PH ..." lines. Lines starting with '#' or ";;;" and blank
// lines are skipped; LF and CRLF are accepted. Throws ParseError for a word
// without phonemes and DecodeError for invalid UTF-8.
Lexicon parse_lexicon(std::istream& in);
Lexicon parse_lexicon_text(std::string_view text);
Lexicon load_lexicon(const std::filesystem::path& path);

// Splits a UTF-8 word into single-code-point graphemes.
std::vector<std::string> graphemes_of(std::string_view word);

// Trims surrounding whitespace and uppercases. Throws DecodeError for
// invalid UTF-8 and InvalidArgument for an empty word or inner whitespace.
std::string normalize_word(std::string_view word);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumReserved = 4;
  static const std::vector<std::string>& reserved_tokens();

  // Just the reserved tokens.
  Vocabulary();
  // Rebuilds a vocabulary from its id-ordered token list. The first four
  // tokens must be the reserved ones and all tokens must be distinct.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  // Returns the id of an existing token, or adds it.
  int add(const std::string& token);
  std::optional<int> find(std::string_view token) const;
  int id_or_unk(std::string_view token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct Vocabs {
  Vocabulary graphemes;
  Vocabulary phonemes;
};

// Reserved tokens followed by symbols in order of first appearance.
Vocabs build_vocabs(std::span<const LexiconEntry> entries);

struct EncodedEntry {
  std::vector<int> input;   // grapheme ids + EOS
  std::vector<int> target;  // SOS + phoneme ids + EOS
};

// Unknown symbols map to UNK unless `strict`, in which case they throw
// InvalidArgument.
EncodedEntry encode_entry(const LexiconEntry& entry, const Vocabs& vocabs,
                          bool strict = false);
std::vector<int> encode_word(std::string_view word, const Vocabulary& graphemes,
                             bool strict = false);

struct DatasetSplit {
  std::vector<LexiconEntry> train;
  std::vector<LexiconEntry> validation;
  std::vector<LexiconEntry> test;
  std::uint64_t seed = 0;
};

struct SplitSizes {
  std::size_t train, validation, test;
};

// round(0.7 N), round(0.2 N), remainder.
SplitSizes split_sizes(std::size_t n);

// Seeded Fisher-Yates permutation of 0..n-1 (see Lcg64), the order in which
// split_dataset assigns entries to train, validation and test.
std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed);

// Requires at least 10 entries.
DatasetSplit split_dataset(std::span<const LexiconEntry> entries, std::uint64_t seed);

}  // namespace g2p
