#pragma once

#include <span>
#include <vector>

#include "g2p/attention.h"
#include "g2p/model.h"

namespace g2p {

template <typename T>
struct EncoderStates {
  Mat<T> states;           // n x hidden, row i = h_i
  Vec<T> final_state;      // h_n, the last unmasked row
  std::vector<bool> mask;  // true = real position
  Mat<T> keys;             // states * attention.w_enc^T, reused by every decode step

  int length() const { return static_cast<int>(states.rows()); }
};

template <typename T>
struct StepOutput {
  Vec<T> state;
  Vec<T> probs;
  AttentionTrace<T> attention;
};

// h_t = gru(embed(x_t), h_{t-1}), h_0 = 0. PAD ids are treated as padding:
// they are masked out of attention and carry the previous state through.
// Throws InvalidArgument for an empty or all-padding sequence and for ids
// outside the grapheme vocabulary.
template <typename T>
EncoderStates<T> encode(std::span<const int> input, const ModelParams<T>& params);

// One attentive decoder step: context from enc and s_prev, then
// s_t = gru([embed(y_prev); c_t], s_prev) and P(y_t) = softmax(W s_t + b).
template <typename T>
StepOutput<T> decode_step(int y_prev, const VecRef<T>& s_prev, const EncoderStates<T>& enc,
                          const ModelParams<T>& params);

// Decodes with gold history. target must be SOS ... EOS; output i predicts
// target[i + 1]. s_0 = h_n.
template <typename T>
std::vector<StepOutput<T>> forward_teacher_forced(std::span<const int> input,
                                                  std::span<const int> target,
                                                  const ModelParams<T>& params);

// log P(target[1..] | input), accumulated in double.
template <typename T>
double sequence_log_prob(std::span<const int> input, std::span<const int> target,
                         const ModelParams<T>& params);

// Throws InvalidArgument unless target = SOS, ids..., EOS with all ids in
// range and no PAD, SOS or EOS between the ends.
void check_target_framing(std::span<const int> target, int phoneme_vocab);

}  // namespace g2p
