#include "g2p/decode.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "g2p/error.h"
#include "g2p/lexicon.h"
#include "g2p/seq2seq.h"

namespace g2p {

int default_max_len(int num_graphemes) { return std::min(2 * num_graphemes + 5, 50); }

namespace {

struct Hypothesis {
  std::vector<int> emitted;  // including a final EOS once finished
  double log_prob = 0.0;
  std::vector<double> step_log_probs;
  std::vector<Vec<double>> attention;
  bool finished = false;
};

template <typename T>
struct Live {
  Hypothesis hyp;
  Vec<T> state;
};

double score(const Hypothesis& h, bool length_normalize) {
  if (!length_normalize || h.step_log_probs.empty()) return h.log_prob;
  return h.log_prob / static_cast<double>(h.step_log_probs.size());
}

DecodeResult to_result(Hypothesis h, int input_len) {
  DecodeResult r;
  r.terminated = h.finished;
  r.log_prob = h.log_prob;
  r.step_log_probs = std::move(h.step_log_probs);
  r.attention.resize(static_cast<Eigen::Index>(h.attention.size()), input_len);
  for (std::size_t t = 0; t < h.attention.size(); ++t)
    r.attention.row(static_cast<Eigen::Index>(t)) = h.attention[t].transpose();
  if (h.finished) h.emitted.pop_back();
  r.ids = std::move(h.emitted);
  return r;
}

void check_decode_args(std::span<const int> input, int max_len) {
  if (input.empty()) throw InvalidArgument("decode: empty input");
  if (max_len < 1) throw InvalidArgument("decode: max_len must be >= 1");
}

}  // namespace

template <typename T>
DecodeResult greedy_decode(std::span<const int> input, const ModelParams<T>& params, int max_len) {
  check_decode_args(input, max_len);
  const auto enc = encode(input, params);
  Hypothesis h;
  Vec<T> state = enc.final_state;
  int prev = Vocabulary::kSos;
  for (int step = 0; step < max_len; ++step) {
    auto out = decode_step<T>(prev, state, enc, params);
    Eigen::Index best = 0;
    // maxCoeff's tie behaviour is unspecified; scan explicitly.
    for (Eigen::Index k = 1; k < out.probs.size(); ++k)
      if (out.probs(k) > out.probs(best)) best = k;
    const double lp = std::log(static_cast<double>(out.probs(best)));
    h.emitted.push_back(static_cast<int>(best));
    h.step_log_probs.push_back(lp);
    h.log_prob += lp;
    h.attention.push_back(out.attention.weights.template cast<double>());
    state = std::move(out.state);
    prev = static_cast<int>(best);
    if (prev == Vocabulary::kEos) {
      h.finished = true;
      break;
    }
  }
  return to_result(std::move(h), static_cast<int>(input.size()));
}

template <typename T>
std::vector<DecodeResult> beam_decode(std::span<const int> input, const ModelParams<T>& params,
                                      int width, int max_len, bool length_normalize) {
  if (width < 1) throw InvalidArgument("beam_decode: width must be >= 1");
  check_decode_args(input, max_len);
  const auto enc = encode(input, params);

  struct Candidate {
    std::size_t parent;
    int token;
    double log_prob;  // token log-probability
    double score;
  };

  std::vector<Live<T>> live(1);
  live[0].state = enc.final_state;
  std::vector<Hypothesis> finished;
  int slots = width;

  for (int step = 0; step < max_len && slots > 0 && !live.empty(); ++step) {
    std::vector<StepOutput<T>> outs;
    outs.reserve(live.size());
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < live.size(); ++i) {
      const auto& h = live[i].hyp;
      const int prev = h.emitted.empty() ? Vocabulary::kSos : h.emitted.back();
      outs.push_back(decode_step<T>(prev, live[i].state, enc, params));
      const auto& probs = outs.back().probs;
      const double steps = static_cast<double>(h.step_log_probs.size() + 1);
      for (Eigen::Index k = 0; k < probs.size(); ++k) {
        const double lp = std::log(static_cast<double>(probs(k)));
        const double total = h.log_prob + lp;
        cands.push_back({i, static_cast<int>(k), lp, length_normalize ? total / steps : total});
      }
    }
    // Every live prefix has the same length, so (parent prefix, token) order
    // is the lexicographic order of the extended sequences.
    auto before = [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) {
        const auto& pa = live[a.parent].hyp.emitted;
        const auto& pb = live[b.parent].hyp.emitted;
        return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
      }
      return a.token < b.token;
    };
    const std::size_t keep = std::min(cands.size(), static_cast<std::size_t>(slots));
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      before);

    std::vector<Live<T>> next;
    for (std::size_t c = 0; c < keep; ++c) {
      const auto& cand = cands[c];
      Live<T> child;
      child.hyp = live[cand.parent].hyp;
      child.hyp.emitted.push_back(cand.token);
      child.hyp.log_prob += cand.log_prob;
      child.hyp.step_log_probs.push_back(cand.log_prob);
      child.hyp.attention.push_back(outs[cand.parent].attention.weights.template cast<double>());
      if (cand.token == Vocabulary::kEos) {
        child.hyp.finished = true;
        finished.push_back(std::move(child.hyp));
        --slots;
      } else {
        child.state = outs[cand.parent].state;
        next.push_back(std::move(child));
      }
    }
    live = std::move(next);
  }

  std::vector<Hypothesis> all = std::move(finished);
  for (auto& l : live) all.push_back(std::move(l.hyp));
  std::sort(all.begin(), all.end(), [&](const Hypothesis& a, const Hypothesis& b) {
    const double sa = score(a, length_normalize), sb = score(b, length_normalize);
    if (sa != sb) return sa > sb;
    return std::lexicographical_compare(a.emitted.begin(), a.emitted.end(), b.emitted.begin(),
                                        b.emitted.end());
  });
  if (all.size() > static_cast<std::size_t>(width)) all.resize(static_cast<std::size_t>(width));

  std::vector<DecodeResult> results;
  results.reserve(all.size());
  for (auto& h : all) results.push_back(to_result(std::move(h), static_cast<int>(input.size())));
  return results;
}

namespace {

void attach_tokens(DecodeResult& r, const Model& model) {
  r.tokens.clear();
  for (int id : r.ids) r.tokens.push_back(model.vocabs.phonemes.token(id));
}

}  // namespace

DecodeResult greedy_decode(std::string_view word, const Model& model, std::optional<int> max_len) {
  const auto input = encode_word(word, model.vocabs.graphemes);
  const int graphemes = static_cast<int>(input.size()) - 1;
  auto r = greedy_decode<float>(input, model.params, max_len.value_or(default_max_len(graphemes)));
  attach_tokens(r, model);
  return r;
}

std::vector<DecodeResult> beam_decode(std::string_view word, const Model& model, int width,
                                      std::optional<int> max_len, bool length_normalize) {
  const auto input = encode_word(word, model.vocabs.graphemes);
  const int graphemes = static_cast<int>(input.size()) - 1;
  auto results = beam_decode<float>(input, model.params, width,
                                    max_len.value_or(default_max_len(graphemes)), length_normalize);
  for (auto& r : results) attach_tokens(r, model);
  return results;
}

#define G2P_INSTANTIATE(T)                                                                       \
  template DecodeResult greedy_decode<T>(std::span<const int>, const ModelParams<T>&, int);      \
  template std::vector<DecodeResult> beam_decode<T>(std::span<const int>, const ModelParams<T>&, \
                                                    int, int, bool);

G2P_INSTANTIATE(float)
G2P_INSTANTIATE(double)

#undef G2P_INSTANTIATE

}  // namespace g2p
