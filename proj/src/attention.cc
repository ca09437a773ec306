#include "g2p/attention.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "g2p/error.h"

namespace g2p {

template <typename T>
AttentionParams<T> AttentionParams<T>::zeros(int encoder_dim, int decoder_dim, int attention_dim) {
  if (encoder_dim < 1 || decoder_dim < 1 || attention_dim < 1)
    throw InvalidArgument("attention dimensions must be positive");
  return {Mat<T>::Zero(attention_dim, encoder_dim), Mat<T>::Zero(attention_dim, decoder_dim),
          Vec<T>::Zero(attention_dim), Vec<T>::Zero(attention_dim)};
}

template <typename T>
void AttentionParams<T>::validate() const {
  const auto a = w_enc.rows();
  if (a < 1 || w_dec.rows() != a || bias.size() != a || v.size() != a)
    throw ShapeError("attention parameters are not shape-consistent");
}

template <typename T>
Vec<T> alignment_scores_from_keys(const Mat<T>& keys, const VecRef<T>& s_prev,
                                  const AttentionParams<T>& p) {
  p.validate();
  if (keys.rows() == 0) throw InvalidArgument("attention over an empty encoder sequence");
  if (keys.cols() != p.attention_dim() || s_prev.size() != p.w_dec.cols())
    throw ShapeError("alignment_scores: shape mismatch");
  Vec<T> query = p.bias;
  query.noalias() += p.w_dec * s_prev;
  Vec<T> scores(keys.rows());
  for (Eigen::Index i = 0; i < keys.rows(); ++i)
    scores(i) = (keys.row(i).transpose() + query).array().tanh().matrix().dot(p.v);
  return scores;
}

template <typename T>
Vec<T> alignment_scores(const Mat<T>& states, const VecRef<T>& s_prev, const AttentionParams<T>& p) {
  p.validate();
  if (states.rows() == 0) throw InvalidArgument("attention over an empty encoder sequence");
  if (states.cols() != p.w_enc.cols()) throw ShapeError("alignment_scores: encoder state size mismatch");
  const Mat<T> keys = states * p.w_enc.transpose();
  return alignment_scores_from_keys<T>(keys, s_prev, p);
}

template <typename T>
Vec<T> attention_weights(const VecRef<T>& scores, const std::vector<bool>& mask) {
  const auto n = scores.size();
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != n)
    throw ShapeError("attention_weights: mask length " + std::to_string(mask.size()) +
                     " != " + std::to_string(n));
  auto live = [&](Eigen::Index i) { return mask.empty() || mask[static_cast<std::size_t>(i)]; };
  T max = -std::numeric_limits<T>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    if (live(i)) max = std::max(max, scores(i));
  if (!std::isfinite(max)) {
    if (max == -std::numeric_limits<T>::infinity())
      throw InvalidArgument("attention_weights: every position is masked");
    throw NumericError("attention_weights: non-finite score");
  }
  Vec<T> w = Vec<T>::Zero(n);
  T sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!live(i)) continue;
    if (!std::isfinite(scores(i))) throw NumericError("attention_weights: non-finite score");
    w(i) = std::exp(scores(i) - max);
    sum += w(i);
  }
  w /= sum;
  return w;
}

template <typename T>
Vec<T> context_vector(const VecRef<T>& weights, const Mat<T>& states) {
  if (weights.size() != states.rows())
    throw ShapeError("context_vector: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(states.rows()) + " states");
  return states.transpose() * weights;
}

#define G2P_INSTANTIATE(T)                                                                   \
  template struct AttentionParams<T>;                                                        \
  template Vec<T> alignment_scores<T>(const Mat<T>&, const VecRef<T>&, const AttentionParams<T>&); \
  template Vec<T> alignment_scores_from_keys<T>(const Mat<T>&, const VecRef<T>&,             \
                                                const AttentionParams<T>&);                  \
  template Vec<T> attention_weights<T>(const VecRef<T>&, const std::vector<bool>&);          \
  template Vec<T> context_vector<T>(const VecRef<T>&, const Mat<T>&);

G2P_INSTANTIATE(float)
G2P_INSTANTIATE(double)

#undef G2P_INSTANTIATE

}  // namespace g2p
