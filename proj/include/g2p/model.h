#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "g2p/attention.h"
#include "g2p/lexicon.h"
#include "g2p/nn.h"

namespace g2p {

struct ModelDims {
  int grapheme_vocab = 0;
  int phoneme_vocab = 0;
  int embed = 64;
  int hidden = 128;
  int attention = 128;

  // Throws InvalidArgument if any dimension is < 1.
  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

// Every trainable block of the encoder-decoder. The decoder consumes
// [phoneme embedding; context] and its state seeds from the encoder's final
// state, so encoder and decoder share `hidden`.
template <typename T>
struct ModelParams {
  ModelDims dims;
  Mat<T> grapheme_embedding;  // grapheme_vocab x embed
  Mat<T> phoneme_embedding;   // phoneme_vocab x embed
  GruCellParams<T> encoder;   // embed -> hidden
  GruCellParams<T> decoder;   // embed + hidden -> hidden
  AttentionParams<T> attention;
  Mat<T> output_w;            // phoneme_vocab x hidden
  Vec<T> output_b;

  static ModelParams zeros(const ModelDims& dims);
  void validate() const;
  std::size_t parameter_count() const;

  // Visits (name, block) in the fixed serialization order: grapheme
  // embedding, phoneme embedding, encoder cell, decoder cell, attention,
  // output projection.
  template <typename F>
  void for_each(F&& f) { visit(*this, f); }
  template <typename F>
  void for_each(F&& f) const { visit(*this, f); }

  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f(std::string("grapheme_embedding"), self.grapheme_embedding);
    f(std::string("phoneme_embedding"), self.phoneme_embedding);
    self.encoder.for_each([&](std::string_view n, auto& b) { f("encoder." + std::string(n), b); });
    self.decoder.for_each([&](std::string_view n, auto& b) { f("decoder." + std::string(n), b); });
    self.attention.for_each(
        [&](std::string_view n, auto& b) { f("attention." + std::string(n), b); });
    f(std::string("output_w"), self.output_w);
    f(std::string("output_b"), self.output_b);
  }

  template <typename U>
  ModelParams<U> cast() const {
    return {dims,
            grapheme_embedding.template cast<U>(),
            phoneme_embedding.template cast<U>(),
            encoder.template cast<U>(),
            decoder.template cast<U>(),
            attention.template cast<U>(),
            output_w.template cast<U>(),
            output_b.template cast<U>()};
  }
};

// Glorot-uniform weights drawn block by block (row-major within a block)
// from Lcg64(seed); all biases zero.
template <typename T>
ModelParams<T> init_params(const ModelDims& dims, std::uint64_t seed);

// A trained converter: vocabularies plus single-precision parameters.
struct Model {
  Vocabs vocabs;
  ModelParams<float> params;
  // Free-form key/value settings persisted in the model file header
  // (training hyperparameters and the like).
  std::map<std::string, std::string> metadata;
};

}  // namespace g2p
