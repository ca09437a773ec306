#pragma once

#include <vector>

#include "g2p/nn.h"

namespace g2p {

// Additive attention, e_i = v^T tanh(W_h h_i + W_s s + b).
template <typename T>
struct AttentionParams {
  Mat<T> w_enc;  // attention_dim x encoder hidden
  Mat<T> w_dec;  // attention_dim x decoder hidden
  Vec<T> bias;
  Vec<T> v;

  static AttentionParams zeros(int encoder_dim, int decoder_dim, int attention_dim);

  int attention_dim() const { return static_cast<int>(w_enc.rows()); }
  void validate() const;

  // Serialization order: w_enc w_dec bias v.
  template <typename F>
  void for_each(F&& f) { visit(*this, f); }
  template <typename F>
  void for_each(F&& f) const { visit(*this, f); }
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f("w_enc", self.w_enc), f("w_dec", self.w_dec), f("bias", self.bias), f("v", self.v);
  }

  template <typename U>
  AttentionParams<U> cast() const {
    return {w_enc.template cast<U>(), w_dec.template cast<U>(), bias.template cast<U>(),
            v.template cast<U>()};
  }
};

template <typename T>
struct AttentionTrace {
  Vec<T> scores;
  Vec<T> weights;
  Vec<T> context;
};

// `states` holds one encoder state per row.
template <typename T>
Vec<T> alignment_scores(const Mat<T>& states, const VecRef<T>& s_prev, const AttentionParams<T>& p);

// Same scores given keys = states * w_enc^T computed once per input.
template <typename T>
Vec<T> alignment_scores_from_keys(const Mat<T>& keys, const VecRef<T>& s_prev,
                                  const AttentionParams<T>& p);

// Softmax over positions where mask is true; masked weights are exactly 0.
// An empty mask means every position is real.
template <typename T>
Vec<T> attention_weights(const VecRef<T>& scores, const std::vector<bool>& mask = {});

template <typename T>
Vec<T> context_vector(const VecRef<T>& weights, const Mat<T>& states);

}  // namespace g2p
