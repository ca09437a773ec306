#include "g2p/training.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "g2p/decode.h"
#include "g2p/error.h"
#include "g2p/rng.h"
#include "g2p/seq2seq.h"

namespace g2p {

template <typename T>
double cross_entropy(std::span<const Vec<T>> probs, std::span<const int> targets,
                     const std::vector<bool>& mask) {
  if (probs.size() != targets.size())
    throw ShapeError("cross_entropy: " + std::to_string(probs.size()) + " distributions for " +
                     std::to_string(targets.size()) + " targets");
  if (!mask.empty() && mask.size() != targets.size())
    throw ShapeError("cross_entropy: mask length mismatch");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (!mask.empty() && !mask[t]) continue;
    const int y = targets[t];
    if (y < 0 || y >= probs[t].size()) throw InvalidArgument("cross_entropy: target out of range");
    total -= std::log(static_cast<double>(probs[t](y)));
    ++count;
  }
  if (count == 0) throw InvalidArgument("cross_entropy: no unmasked steps");
  return total / static_cast<double>(count);
}

template <typename T>
double example_loss(const EncodedEntry& example, const ModelParams<T>& params) {
  const double lp = sequence_log_prob<T>(example.input, example.target, params);
  return -lp / static_cast<double>(example.target.size() - 1);
}

template <typename T>
double batch_loss(std::span<const EncodedEntry> batch, const ModelParams<T>& params) {
  if (batch.empty()) throw InvalidArgument("batch_loss: empty batch");
  double total = 0.0;
  for (const auto& ex : batch) total += example_loss(ex, params);
  return total / static_cast<double>(batch.size());
}

namespace {

// Everything the backward pass needs from one teacher-forced forward pass.
template <typename T>
struct ExampleTape {
  GruTape<T> encoder;
  GruTape<T> decoder;
  Mat<T> states;              // n x hidden
  Mat<T> keys;                // n x attention
  Mat<T> dec_states;          // hidden x (m + 1); column 0 is h_n
  std::vector<Mat<T>> act;    // per step: tanh(keys + query), n x attention
  Mat<T> alpha;               // n x m
  Mat<T> probs;               // phoneme_vocab x m
};

template <typename T>
double tape_forward(const EncodedEntry& ex, const ModelParams<T>& p, ExampleTape<T>& tape) {
  const auto& d = p.dims;
  const auto& x = ex.input;
  const auto& y = ex.target;
  if (x.empty()) throw InvalidArgument("training example with empty input");
  check_target_framing(y, d.phoneme_vocab);
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(y.size()) - 1;

  tape.encoder = GruTape<T>(d.embed, d.hidden, n);
  tape.states.resize(n, d.hidden);
  Vec<T> h = Vec<T>::Zero(d.hidden);
  for (int t = 0; t < n; ++t) {
    const int id = x[static_cast<std::size_t>(t)];
    if (id <= Vocabulary::kPad || id >= d.grapheme_vocab)
      throw InvalidArgument("training input id " + std::to_string(id) + " is padding or out of range");
    h = tape.encoder.forward(t, p.grapheme_embedding.row(id).transpose(), h, p.encoder);
    tape.states.row(t) = h.transpose();
  }
  tape.keys = tape.states * p.attention.w_enc.transpose();

  tape.decoder = GruTape<T>(d.embed + d.hidden, d.hidden, m);
  tape.dec_states.resize(d.hidden, m + 1);
  tape.dec_states.col(0) = h;
  tape.act.resize(static_cast<std::size_t>(m));
  tape.alpha.resize(n, m);
  tape.probs.resize(d.phoneme_vocab, m);

  Vec<T> input(d.embed + d.hidden);
  Vec<T> query(d.attention);
  double loss = 0.0;
  for (int t = 0; t < m; ++t) {
    const auto s_prev = tape.dec_states.col(t);
    query = p.attention.bias;
    query.noalias() += p.attention.w_dec * s_prev;
    auto& act = tape.act[static_cast<std::size_t>(t)];
    act = (tape.keys.rowwise() + query.transpose()).array().tanh().matrix();
    const Vec<T> scores = act * p.attention.v;
    tape.alpha.col(t) = softmax<T>(scores);

    input.head(d.embed) = p.phoneme_embedding.row(y[static_cast<std::size_t>(t)]).transpose();
    input.tail(d.hidden).noalias() = tape.states.transpose() * tape.alpha.col(t);
    tape.dec_states.col(t + 1) = tape.decoder.forward(t, input, s_prev, p.decoder);

    Vec<T> logits = p.output_b;
    logits.noalias() += p.output_w * tape.dec_states.col(t + 1);
    tape.probs.col(t) = softmax<T>(logits);
    loss -= std::log(static_cast<double>(tape.probs(y[static_cast<std::size_t>(t + 1)], t)));
  }
  loss /= static_cast<double>(m);
  if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
  return loss;
}

// Adds scale * dLoss/dParams for one example to grads.
template <typename T>
void tape_backward(const EncodedEntry& ex, const ModelParams<T>& p, ExampleTape<T>& tape,
                   T scale, ModelParams<T>& g) {
  const auto& d = p.dims;
  const auto& x = ex.input;
  const auto& y = ex.target;
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(y.size()) - 1;
  const T step_scale = scale / static_cast<T>(m);

  // Softmax + cross-entropy: dL/dlogits = p - onehot(target).
  Mat<T> dlogits = tape.probs;
  for (int t = 0; t < m; ++t) dlogits(y[static_cast<std::size_t>(t + 1)], t) -= T(1);
  dlogits *= step_scale;
  g.output_w.noalias() += dlogits * tape.dec_states.rightCols(m).transpose();
  g.output_b += dlogits.rowwise().sum();
  const Mat<T> d_out_states = p.output_w.transpose() * dlogits;  // hidden x m

  Mat<T> d_context(d.hidden, m);
  Mat<T> d_pre_sum = Mat<T>::Zero(n, d.attention);  // sum over steps of dL/d(keys + query)
  Mat<T> d_query(d.attention, m);
  Vec<T> carry = Vec<T>::Zero(d.hidden);
  Vec<T> dx(d.embed + d.hidden), dh_prev(d.hidden);
  Mat<T> d_pre(n, d.attention);

  for (int t = m - 1; t >= 0; --t) {
    const Vec<T> ds = d_out_states.col(t) + carry;
    tape.decoder.backward(t, ds, p.decoder, dx, dh_prev);
    g.phoneme_embedding.row(y[static_cast<std::size_t>(t)]) += dx.head(d.embed).transpose();
    d_context.col(t) = dx.tail(d.hidden);

    // c = states^T alpha
    const auto alpha = tape.alpha.col(t);
    const Vec<T> d_alpha = tape.states * d_context.col(t);
    const Vec<T> d_scores = alpha.cwiseProduct((d_alpha.array() - alpha.dot(d_alpha)).matrix());

    // scores = act v, act = tanh(keys + query)
    const auto& act = tape.act[static_cast<std::size_t>(t)];
    g.attention.v.noalias() += act.transpose() * d_scores;
    d_pre = (d_scores * p.attention.v.transpose()).cwiseProduct(
        (T(1) - act.array().square()).matrix());
    d_pre_sum += d_pre;
    d_query.col(t) = d_pre.colwise().sum().transpose();

    carry = dh_prev;
    carry.noalias() += p.attention.w_dec.transpose() * d_query.col(t);
  }

  g.attention.w_dec.noalias() += d_query * tape.dec_states.leftCols(m).transpose();
  g.attention.bias += d_query.rowwise().sum();
  g.attention.w_enc.noalias() += d_pre_sum.transpose() * tape.states;
  tape.decoder.accumulate(g.decoder);

  Mat<T> d_states = d_pre_sum * p.attention.w_enc;
  d_states.noalias() += tape.alpha * d_context.transpose();
  d_states.row(n - 1) += carry.transpose();  // s_0 = h_n

  Vec<T> dxe(d.embed);
  carry.setZero();
  for (int t = n - 1; t >= 0; --t) {
    const Vec<T> dh = d_states.row(t).transpose() + carry;
    tape.encoder.backward(t, dh, p.encoder, dxe, dh_prev);
    g.grapheme_embedding.row(x[static_cast<std::size_t>(t)]) += dxe.transpose();
    carry = dh_prev;
  }
  tape.encoder.accumulate(g.encoder);
}

template <typename T>
void set_zero(ModelParams<T>& p) {
  p.for_each([](const std::string&, auto& block) { block.setZero(); });
}

}  // namespace

template <typename T>
double backward(std::span<const EncodedEntry> batch, const ModelParams<T>& params,
                ModelParams<T>& grads) {
  if (batch.empty()) throw InvalidArgument("backward: empty batch");
  params.validate();
  if (grads.dims == params.dims) {
    set_zero(grads);
  } else {
    grads = ModelParams<T>::zeros(params.dims);
  }
  const T scale = T(1) / static_cast<T>(batch.size());
  ExampleTape<T> tape;
  double loss = 0.0;
  for (const auto& ex : batch) {
    loss += tape_forward(ex, params, tape);
    tape_backward(ex, params, tape, scale, grads);
  }
  return loss / static_cast<double>(batch.size());
}

template <typename T>
double clip_global_norm(ModelParams<T>& grads, double max_norm) {
  double sq = 0.0;
  grads.for_each([&](const std::string&, const auto& b) {
    sq += b.template cast<double>().squaredNorm();
  });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T factor = static_cast<T>(max_norm / norm);
    grads.for_each([&](const std::string&, auto& b) { b *= factor; });
  }
  return norm;
}

template <typename T>
AdamState<T> AdamState<T>::zeros(const ModelDims& dims) {
  return {ModelParams<T>::zeros(dims), ModelParams<T>::zeros(dims), 0};
}

namespace {

// Pairs up corresponding blocks of several parameter sets.
template <typename T, typename F>
void zip_blocks(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state, F&& f) {
  std::vector<std::pair<T*, Eigen::Index>> p, m, v;
  std::vector<std::pair<const T*, Eigen::Index>> g;
  params.for_each([&](const std::string&, auto& b) { p.emplace_back(b.data(), b.size()); });
  grads.for_each([&](const std::string&, const auto& b) { g.emplace_back(b.data(), b.size()); });
  state.first_moment.for_each([&](const std::string&, auto& b) { m.emplace_back(b.data(), b.size()); });
  state.second_moment.for_each([&](const std::string&, auto& b) { v.emplace_back(b.data(), b.size()); });
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i].second != p[i].second || m[i].second != p[i].second || v[i].second != p[i].second)
      throw ShapeError("adam_step: parameter, gradient and state shapes differ");
  }
  for (std::size_t i = 0; i < p.size(); ++i) f(p[i].first, g[i].first, m[i].first, v[i].first, p[i].second);
}

}  // namespace

template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state,
               const AdamConfig& config) {
  if (!(grads.dims == params.dims) || !(state.first_moment.dims == params.dims) ||
      !(state.second_moment.dims == params.dims))
    throw ShapeError("adam_step: parameter, gradient and state shapes differ");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(config.beta1, t)));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(config.beta2, t)));
  const T lr = static_cast<T>(config.learning_rate), eps = static_cast<T>(config.epsilon);
  zip_blocks(params, grads, state, [&](T* p, const T* g, T* m, T* v, Eigen::Index size) {
    for (Eigen::Index i = 0; i < size; ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      p[i] -= lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
    }
  });
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("invalid training config: ") + what);
  };
  require(learning_rate > 0.0, "learning rate must be > 0");
  require(epochs >= 0, "epochs must be >= 0");
  require(batch_size >= 1, "batch size must be >= 1");
  require(beta1 > 0.0 && beta1 < 1.0, "beta1 must be in (0, 1)");
  require(beta2 > 0.0 && beta2 < 1.0, "beta2 must be in (0, 1)");
  require(epsilon > 0.0, "epsilon must be > 0");
  require(patience >= 1, "patience must be >= 1");
  require(lr_decay > 0.0 && lr_decay < 1.0, "lr decay must be in (0, 1)");
  require(min_lr >= 0.0, "min lr must be >= 0");
  require(embed >= 1 && hidden >= 1 && attention >= 0, "dimensions must be positive");
}

void TrainHistory::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,val_loss,val_word_acc,lr\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << std::setprecision(9) << e.train_loss << ',' << e.val_loss << ','
        << e.val_word_acc << ',' << e.learning_rate << '\n';
  }
}

double word_accuracy(const Model& model, std::span<const LexiconEntry> entries) {
  if (entries.empty()) throw InvalidArgument("word_accuracy: no entries");
  std::size_t correct = 0;
  for (const auto& e : entries) correct += greedy_decode(e.word, model).tokens == e.phonemes;
  return static_cast<double>(correct) / static_cast<double>(entries.size());
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

TrainResult train(const DatasetSplit& split, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (split.train.empty()) throw InvalidArgument("train: empty training set");

  TrainResult result;
  Model& model = result.model;
  model.vocabs = build_vocabs(split.train);
  ModelDims dims;
  dims.grapheme_vocab = model.vocabs.graphemes.size();
  dims.phoneme_vocab = model.vocabs.phonemes.size();
  dims.embed = config.embed;
  dims.hidden = config.hidden;
  dims.attention = config.attention > 0 ? config.attention : config.hidden;
  model.params = init_params<float>(dims, config.seed);
  model.metadata = {
      {"train.learning_rate", format_double(config.learning_rate)},
      {"train.epochs", std::to_string(config.epochs)},
      {"train.batch_size", std::to_string(config.batch_size)},
      {"train.beta1", format_double(config.beta1)},
      {"train.beta2", format_double(config.beta2)},
      {"train.epsilon", format_double(config.epsilon)},
      {"train.patience", std::to_string(config.patience)},
      {"train.lr_decay", format_double(config.lr_decay)},
      {"train.clip_norm", format_double(config.clip_norm)},
      {"train.seed", std::to_string(config.seed)},
  };
  if (config.epochs == 0) return result;

  std::vector<EncodedEntry> train_set, val_set;
  for (const auto& e : split.train) train_set.push_back(encode_entry(e, model.vocabs));
  for (const auto& e : split.validation) val_set.push_back(encode_entry(e, model.vocabs));
  const bool have_val = !val_set.empty();
  const auto& monitor_set = have_val ? val_set : train_set;
  std::span<const LexiconEntry> monitor_entries = have_val ? split.validation : split.train;

  ModelParams<float> params = model.params;
  ModelParams<float> grads = ModelParams<float>::zeros(dims);
  auto adam = AdamState<float>::zeros(dims);
  AdamConfig adam_config{config.learning_rate, config.beta1, config.beta2, config.epsilon};
  Lcg64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EncodedEntry> batch;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  Model probe{model.vocabs, {}, {}};

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(train_set[order[k]]);
      const double loss = backward<float>(batch, params, grads);
      epoch_loss += loss * static_cast<double>(batch.size());
      clip_global_norm(grads, config.clip_norm);
      adam_step(params, grads, adam, adam_config);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(train_set.size());
    rec.val_loss = batch_loss<float>(monitor_set, params);
    rec.learning_rate = adam_config.learning_rate;
    if (config.track_word_accuracy) {
      probe.params = params;
      rec.val_word_acc = word_accuracy(probe, monitor_entries);
    }
    if (!std::isfinite(rec.val_loss)) throw NumericError("train: non-finite validation loss");

    if (rec.val_loss < best) {
      best = rec.val_loss;
      stale = 0;
      model.params = params;
      result.best_epoch = epoch;
    } else if (++stale >= config.patience) {
      adam_config.learning_rate = std::max(adam_config.learning_rate * config.lr_decay, config.min_lr);
      stale = 0;
    }
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

#define G2P_INSTANTIATE(T)                                                                      \
  template double cross_entropy<T>(std::span<const Vec<T>>, std::span<const int>,               \
                                   const std::vector<bool>&);                                   \
  template double example_loss<T>(const EncodedEntry&, const ModelParams<T>&);                  \
  template double batch_loss<T>(std::span<const EncodedEntry>, const ModelParams<T>&);          \
  template double backward<T>(std::span<const EncodedEntry>, const ModelParams<T>&,             \
                              ModelParams<T>&);                                                 \
  template double clip_global_norm<T>(ModelParams<T>&, double);                                 \
  template struct AdamState<T>;                                                                 \
  template void adam_step<T>(ModelParams<T>&, const ModelParams<T>&, AdamState<T>&,             \
                             const AdamConfig&);

G2P_INSTANTIATE(float)
G2P_INSTANTIATE(double)

#undef G2P_INSTANTIATE

}  // namespace g2p
