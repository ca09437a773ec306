#include "g2p/seq2seq.h"

#include <cmath>
#include <string>

#include "g2p/error.h"
#include "g2p/lexicon.h"

namespace g2p {

template <typename T>
EncoderStates<T> encode(std::span<const int> input, const ModelParams<T>& params) {
  if (input.empty()) throw InvalidArgument("encode: empty input sequence");
  const int hidden = params.dims.hidden;
  const int n = static_cast<int>(input.size());

  EncoderStates<T> enc;
  enc.states.resize(n, hidden);
  enc.mask.assign(input.size(), true);
  GruTape<T> tape(params.dims.embed, hidden, 1);
  Vec<T> h = Vec<T>::Zero(hidden);
  bool any = false;
  for (int t = 0; t < n; ++t) {
    const int id = input[static_cast<std::size_t>(t)];
    if (id < 0 || id >= params.dims.grapheme_vocab)
      throw InvalidArgument("encode: grapheme id " + std::to_string(id) + " out of range");
    if (id == Vocabulary::kPad) {
      enc.mask[static_cast<std::size_t>(t)] = false;
    } else {
      h = tape.forward(0, params.grapheme_embedding.row(id).transpose(), h, params.encoder);
      enc.final_state = h;
      any = true;
    }
    enc.states.row(t) = h.transpose();
  }
  if (!any) throw InvalidArgument("encode: input is all padding");
  if (!enc.states.allFinite()) throw NumericError("encode: non-finite encoder state");
  enc.keys = enc.states * params.attention.w_enc.transpose();
  return enc;
}

template <typename T>
StepOutput<T> decode_step(int y_prev, const VecRef<T>& s_prev, const EncoderStates<T>& enc,
                          const ModelParams<T>& params) {
  const auto& d = params.dims;
  if (y_prev < 0 || y_prev >= d.phoneme_vocab)
    throw InvalidArgument("decode_step: phoneme id " + std::to_string(y_prev) + " out of range");
  if (s_prev.size() != d.hidden) throw ShapeError("decode_step: decoder state size mismatch");

  StepOutput<T> out;
  out.attention.scores = alignment_scores_from_keys<T>(enc.keys, s_prev, params.attention);
  out.attention.weights = attention_weights<T>(out.attention.scores, enc.mask);
  out.attention.context = context_vector<T>(out.attention.weights, enc.states);

  Vec<T> input(d.embed + d.hidden);
  input.head(d.embed) = params.phoneme_embedding.row(y_prev).transpose();
  input.tail(d.hidden) = out.attention.context;
  out.state = gru_cell<T>(input, s_prev, params.decoder);
  out.probs = softmax<T>(affine<T>(out.state, params.output_w, params.output_b));
  return out;
}

void check_target_framing(std::span<const int> target, int phoneme_vocab) {
  if (target.size() < 2 || target.front() != Vocabulary::kSos || target.back() != Vocabulary::kEos)
    throw InvalidArgument("target must start with SOS and end with EOS");
  for (int id : target)
    if (id < 0 || id >= phoneme_vocab)
      throw InvalidArgument("target phoneme id " + std::to_string(id) + " out of range");
  for (std::size_t t = 1; t + 1 < target.size(); ++t)
    if (target[t] < Vocabulary::kUnk)
      throw InvalidArgument("reserved id inside target at position " + std::to_string(t));
}

template <typename T>
std::vector<StepOutput<T>> forward_teacher_forced(std::span<const int> input,
                                                  std::span<const int> target,
                                                  const ModelParams<T>& params) {
  check_target_framing(target, params.dims.phoneme_vocab);
  const auto enc = encode(input, params);
  std::vector<StepOutput<T>> steps;
  steps.reserve(target.size() - 1);
  Vec<T> s = enc.final_state;
  for (std::size_t t = 1; t < target.size(); ++t) {
    steps.push_back(decode_step<T>(target[t - 1], s, enc, params));
    s = steps.back().state;
  }
  return steps;
}

template <typename T>
double sequence_log_prob(std::span<const int> input, std::span<const int> target,
                         const ModelParams<T>& params) {
  const auto steps = forward_teacher_forced(input, target, params);
  double total = 0.0;
  for (std::size_t t = 0; t < steps.size(); ++t)
    total += std::log(static_cast<double>(steps[t].probs(target[t + 1])));
  return total;
}

#define G2P_INSTANTIATE(T)                                                                  \
  template EncoderStates<T> encode<T>(std::span<const int>, const ModelParams<T>&);         \
  template StepOutput<T> decode_step<T>(int, const VecRef<T>&, const EncoderStates<T>&,     \
                                        const ModelParams<T>&);                             \
  template std::vector<StepOutput<T>> forward_teacher_forced<T>(                            \
      std::span<const int>, std::span<const int>, const ModelParams<T>&);                   \
  template double sequence_log_prob<T>(std::span<const int>, std::span<const int>,          \
                                       const ModelParams<T>&);

G2P_INSTANTIATE(float)
G2P_INSTANTIATE(double)

#undef G2P_INSTANTIATE

}  // namespace g2p
