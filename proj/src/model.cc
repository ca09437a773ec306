#include "g2p/model.h"

#include "g2p/error.h"

namespace g2p {

void ModelDims::validate() const {
  if (grapheme_vocab < 1 || phoneme_vocab < 1 || embed < 1 || hidden < 1 || attention < 1)
    throw InvalidArgument("model dimensions must all be >= 1");
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ModelDims& dims) {
  dims.validate();
  ModelParams p;
  p.dims = dims;
  p.grapheme_embedding = Mat<T>::Zero(dims.grapheme_vocab, dims.embed);
  p.phoneme_embedding = Mat<T>::Zero(dims.phoneme_vocab, dims.embed);
  p.encoder = GruCellParams<T>::zeros(dims.embed, dims.hidden);
  p.decoder = GruCellParams<T>::zeros(dims.embed + dims.hidden, dims.hidden);
  p.attention = AttentionParams<T>::zeros(dims.hidden, dims.hidden, dims.attention);
  p.output_w = Mat<T>::Zero(dims.phoneme_vocab, dims.hidden);
  p.output_b = Vec<T>::Zero(dims.phoneme_vocab);
  return p;
}

template <typename T>
void ModelParams<T>::validate() const {
  dims.validate();
  encoder.validate();
  decoder.validate();
  attention.validate();
  const bool ok =
      grapheme_embedding.rows() == dims.grapheme_vocab && grapheme_embedding.cols() == dims.embed &&
      phoneme_embedding.rows() == dims.phoneme_vocab && phoneme_embedding.cols() == dims.embed &&
      encoder.input_dim() == dims.embed && encoder.hidden_dim() == dims.hidden &&
      decoder.input_dim() == dims.embed + dims.hidden && decoder.hidden_dim() == dims.hidden &&
      attention.attention_dim() == dims.attention && attention.w_enc.cols() == dims.hidden &&
      attention.w_dec.cols() == dims.hidden && output_w.rows() == dims.phoneme_vocab &&
      output_w.cols() == dims.hidden && output_b.size() == dims.phoneme_vocab;
  if (!ok) throw ShapeError("model parameters do not match their dimensions");
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const auto& b) { n += static_cast<std::size_t>(b.size()); });
  return n;
}

template <typename T>
ModelParams<T> init_params(const ModelDims& dims, std::uint64_t seed) {
  auto p = ModelParams<T>::zeros(dims);
  Lcg64 rng(seed);
  p.for_each([&](const std::string&, auto& block) {
    if constexpr (std::decay_t<decltype(block)>::ColsAtCompileTime == Eigen::Dynamic) {
      glorot_uniform(block, rng);
    }
  });
  return p;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<float> init_params<float>(const ModelDims&, std::uint64_t);
template ModelParams<double> init_params<double>(const ModelDims&, std::uint64_t);

}  // namespace g2p
