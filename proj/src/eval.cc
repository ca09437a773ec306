#include "g2p/eval.h"

#include <iomanip>
#include <ostream>

#include "g2p/decode.h"
#include "g2p/error.h"

namespace g2p {

double phoneme_error_rate(std::span<const std::pair<TokenSeq, TokenSeq>> pairs) {
  std::size_t errors = 0, ref_len = 0;
  for (const auto& [hyp, ref] : pairs) {
    errors += edit_distance(hyp, ref).distance;
    ref_len += ref.size();
  }
  if (ref_len == 0) throw InvalidArgument("phoneme_error_rate: all references are empty");
  return static_cast<double>(errors) / static_cast<double>(ref_len);
}

double Metrics::word_accuracy() const {
  return words == 0 ? 0.0 : static_cast<double>(correct_words) / static_cast<double>(words);
}

double Metrics::phoneme_error_rate() const {
  return ref_phonemes == 0 ? 0.0 : static_cast<double>(errors()) / static_cast<double>(ref_phonemes);
}

void Metrics::add(const TokenSeq& hyp, const TokenSeq& ref) {
  const auto s = edit_distance(hyp, ref);
  ++words;
  correct_words += hyp == ref;
  ref_phonemes += ref.size();
  substitutions += s.substitutions;
  insertions += s.insertions;
  deletions += s.deletions;
}

Metrics& Metrics::operator+=(const Metrics& o) {
  words += o.words;
  correct_words += o.correct_words;
  ref_phonemes += o.ref_phonemes;
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
  return *this;
}

std::unordered_set<std::string> word_set(std::span<const LexiconEntry> entries) {
  std::unordered_set<std::string> words;
  for (const auto& e : entries) words.insert(e.word);
  return words;
}

EvalReport evaluate(const Model& model, std::span<const LexiconEntry> entries,
                    const std::unordered_set<std::string>& oov_reference, const EvalOptions& options) {
  if (entries.empty()) throw InvalidArgument("evaluate: no entries");
  if (options.beam_width < 1) throw InvalidArgument("evaluate: beam width must be >= 1");
  EvalReport report;
  Metrics oov;
  for (const auto& e : entries) {
    const TokenSeq hyp = options.beam_width == 1
                             ? greedy_decode(e.word, model).tokens
                             : beam_decode(e.word, model, options.beam_width).front().tokens;
    report.overall.add(hyp, e.phonemes);
    if (!oov_reference.contains(e.word)) oov.add(hyp, e.phonemes);
  }
  if (oov.words > 0) report.oov = oov;
  return report;
}

namespace {

void text_block(std::ostream& out, const char* name, const Metrics& m) {
  out << name << ": " << m.words << " words, word accuracy " << std::fixed << std::setprecision(4)
      << m.word_accuracy() << " (" << m.correct_words << "/" << m.words << "), PER "
      << m.phoneme_error_rate() << " (S=" << m.substitutions << " I=" << m.insertions
      << " D=" << m.deletions << " over " << m.ref_phonemes << " phonemes)\n";
  out.unsetf(std::ios::floatfield);
}

void csv_row(std::ostream& out, const char* name, const Metrics& m) {
  out << name << ',' << m.words << ',' << m.correct_words << ',' << std::fixed << std::setprecision(6)
      << m.word_accuracy() << ',' << m.ref_phonemes << ',' << m.substitutions << ','
      << m.insertions << ',' << m.deletions << ',' << m.phoneme_error_rate() << '\n';
  out.unsetf(std::ios::floatfield);
}

}  // namespace

void EvalReport::write_text(std::ostream& out) const {
  text_block(out, "overall", overall);
  if (oov) {
    text_block(out, "oov", *oov);
  } else {
    out << "oov: none (every word occurs in the training set)\n";
  }
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "subset,words,correct,word_acc,ref_phonemes,sub,ins,del,per\n";
  csv_row(out, "overall", overall);
  if (oov) csv_row(out, "oov", *oov);
}

}  // namespace g2p
