#pragma once

#include <algorithm>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "g2p/lexicon.h"
#include "g2p/model.h"

namespace g2p {

struct EditStats {
  std::size_t distance = 0;
  std::size_t substitutions = 0;
  std::size_t insertions = 0;  // extra tokens in the hypothesis
  std::size_t deletions = 0;   // reference tokens missing from the hypothesis

  bool operator==(const EditStats&) const = default;
};

// Unit-cost Levenshtein distance. The S/I/D breakdown follows one optimal
// alignment, preferring substitution (or match), then deletion, then
// insertion when tracing back.
template <typename Token>
EditStats edit_distance(std::span<const Token> hyp, std::span<const Token> ref) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1), at(i - 1, j) + 1,
                           at(i, j - 1) + 1});

  EditStats s;
  s.distance = at(n, m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const std::size_t diag = ref[i - 1] == hyp[j - 1] ? 0 : 1;
      if (at(i, j) == at(i - 1, j - 1) + diag) {
        s.substitutions += diag;
        --i, --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++s.deletions;
      --i;
    } else {
      ++s.insertions;
      --j;
    }
  }
  return s;
}

inline EditStats edit_distance(const std::vector<std::string>& hyp,
                               const std::vector<std::string>& ref) {
  return edit_distance<std::string>(std::span<const std::string>(hyp),
                                    std::span<const std::string>(ref));
}

using TokenSeq = std::vector<std::string>;

// Total edit distance over total reference length. Throws InvalidArgument
// when every reference is empty.
double phoneme_error_rate(std::span<const std::pair<TokenSeq, TokenSeq>> pairs);

struct Metrics {
  std::size_t words = 0;
  std::size_t correct_words = 0;
  std::size_t ref_phonemes = 0;
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;

  std::size_t errors() const { return substitutions + insertions + deletions; }
  double word_accuracy() const;
  double phoneme_error_rate() const;
  void add(const TokenSeq& hyp, const TokenSeq& ref);
  Metrics& operator+=(const Metrics& other);
  bool operator==(const Metrics&) const = default;
};

struct EvalReport {
  Metrics overall;
  std::optional<Metrics> oov;  // absent when no entry is out of vocabulary

  void write_text(std::ostream& out) const;
  // subset,words,correct,word_acc,ref_phonemes,sub,ins,del,per
  void write_csv(std::ostream& out) const;
};

struct EvalOptions {
  int beam_width = 1;  // 1 = greedy
};

// Decodes every entry and scores it against its pronunciation, overall and
// for entries whose word is not in oov_reference (the training words).
EvalReport evaluate(const Model& model, std::span<const LexiconEntry> entries,
                    const std::unordered_set<std::string>& oov_reference,
                    const EvalOptions& options = {});

std::unordered_set<std::string> word_set(std::span<const LexiconEntry> entries);

}  // namespace g2p
