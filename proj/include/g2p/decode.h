#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "g2p/model.h"
#include "g2p/nn.h"

namespace g2p {

struct DecodeResult {
  std::vector<int> ids;             // emitted phoneme ids, EOS excluded
  std::vector<std::string> tokens;  // filled by the text overloads
  double log_prob = 0.0;            // sum of step_log_probs
  std::vector<double> step_log_probs;
  Mat<double> attention;            // one row per decoder step, one column per input position
  bool terminated = false;          // false when cut off by max_len
};

// min(2 * graphemes + 5, 50)
int default_max_len(int num_graphemes);

// Argmax at every step, lowest id on ties, until EOS or max_len steps.
template <typename T>
DecodeResult greedy_decode(std::span<const int> input, const ModelParams<T>& params, int max_len);

// Beam search over P(Y|X). Each step keeps the best `live` extensions of the
// live hypotheses, where live starts at `width` and shrinks by one for every
// hypothesis that emits EOS. Scores are total log-probabilities, or their
// per-step mean when length_normalize is set; ties go to the
// lexicographically smaller id sequence. Returns up to `width` results, best
// first. Width 1 reproduces greedy_decode exactly, and a width of at least
// V^max_len visits every sequence.
template <typename T>
std::vector<DecodeResult> beam_decode(std::span<const int> input, const ModelParams<T>& params,
                                      int width, int max_len, bool length_normalize = false);

// Text front ends: normalize and encode `word` with the model's grapheme
// vocabulary (unknown graphemes become UNK), decode, and map ids to phoneme
// tokens. Throw InvalidArgument for an empty word.
DecodeResult greedy_decode(std::string_view word, const Model& model,
                           std::optional<int> max_len = std::nullopt);
std::vector<DecodeResult> beam_decode(std::string_view word, const Model& model, int width,
                                      std::optional<int> max_len = std::nullopt,
                                      bool length_normalize = false);

}  // namespace g2p
