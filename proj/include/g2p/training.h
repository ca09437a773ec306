#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "g2p/lexicon.h"
#include "g2p/model.h"

namespace g2p {

// Mean of -log probs[t](targets[t]) over steps whose mask entry is true (an
// empty mask selects every step). Throws InvalidArgument when no step is
// selected.
template <typename T>
double cross_entropy(std::span<const Vec<T>> probs, std::span<const int> targets,
                     const std::vector<bool>& mask = {});

// Teacher-forced loss of one example: mean over its target steps.
template <typename T>
double example_loss(const EncodedEntry& example, const ModelParams<T>& params);

// Mean example_loss over a batch.
template <typename T>
double batch_loss(std::span<const EncodedEntry> batch, const ModelParams<T>& params);

// Analytic gradient of batch_loss by backpropagation through the decoder,
// attention and encoder. `grads` is resized and overwritten. Returns the
// loss. Throws NumericError on a non-finite loss.
template <typename T>
double backward(std::span<const EncodedEntry> batch, const ModelParams<T>& params,
                ModelParams<T>& grads);

// Scales grads so their global L2 norm is at most max_norm (no-op when
// max_norm <= 0). Returns the norm before clipping.
template <typename T>
double clip_global_norm(ModelParams<T>& grads, double max_norm);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  ModelParams<T> first_moment;
  ModelParams<T> second_moment;
  std::int64_t step = 0;

  static AdamState zeros(const ModelDims& dims);
};

// Bias-corrected Adam:
//   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2,  t += 1
//   p -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state,
               const AdamConfig& config);

struct TrainConfig {
  double learning_rate = 0.001;
  int epochs = 50;
  int batch_size = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Reduce-on-plateau: after `patience` epochs without a new best
  // validation loss the rate is multiplied by lr_decay, down to min_lr.
  int patience = 5;
  double lr_decay = 0.5;
  double min_lr = 1e-5;
  double clip_norm = 5.0;  // <= 0 disables clipping
  std::uint64_t seed = 0;
  int embed = 64;
  int hidden = 128;
  int attention = 0;  // 0 means "same as hidden"
  // Greedy-decode the validation set after every epoch for val_word_acc.
  bool track_word_accuracy = true;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_word_acc = 0.0;
  double learning_rate = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  // epoch,train_loss,val_loss,val_word_acc,lr
  void write_csv(std::ostream& out) const;
};

struct TrainResult {
  Model model;
  TrainHistory history;
  int best_epoch = 0;  // 0 when no epoch ran
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Builds vocabularies from split.train, initialises from config.seed, and
// runs config.epochs epochs of shuffled mini-batches. Returns the
// parameters of the epoch with the lowest validation loss (or training-set
// loss when the validation split is empty).
TrainResult train(const DatasetSplit& split, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Fraction of entries whose greedy decode matches the reference exactly.
double word_accuracy(const Model& model, std::span<const LexiconEntry> entries);

}  // namespace g2p
