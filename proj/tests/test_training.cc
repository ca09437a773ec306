#include <doctest.h>

#include <cmath>
#include <sstream>

#include "g2p/error.h"
#include "g2p/seq2seq.h"
#include "g2p/training.h"
#include "test_util.h"

using namespace g2p;
using g2p::testing::flatten;
using g2p::testing::grad_blocks;
using Vd = Vec<double>;
using std::vector;

namespace {

vector<EncodedEntry> random_batch(Lcg64& rng, const ModelDims& dims, int n) {
  vector<EncodedEntry> out;
  for (int i = 0; i < n; ++i) {
    EncodedEntry e;
    const int len = 1 + int(rng.below(5));
    for (int k = 0; k < len; ++k) e.input.push_back(4 + int(rng.below(dims.grapheme_vocab - 4)));
    e.input.push_back(Vocabulary::kEos);
    e.target.push_back(Vocabulary::kSos);
    const int out_len = 1 + int(rng.below(5));
    for (int k = 0; k < out_len; ++k) e.target.push_back(3 + int(rng.below(dims.phoneme_vocab - 3)));
    e.target.push_back(Vocabulary::kEos);
    out.push_back(std::move(e));
  }
  return out;
}

ModelParams<double> random_params(Lcg64& rng, const ModelDims& dims, double scale) {
  auto p = ModelParams<double>::zeros(dims);
  g2p::testing::randomize(p, rng, scale);
  return p;
}

vector<LexiconEntry> toy_lexicon() {
  return load_lexicon(g2p::testing::data_dir() / "toy50.dict").entries;
}

}  // namespace

TEST_CASE("cross_entropy examples") {
  const vector<Vd> onehot{(Vd(3) << 0, 1, 0).finished()};
  const vector<int> t1{1};
  CHECK(cross_entropy<double>(onehot, t1) == 0.0);

  const vector<Vd> uniform(4, Vd::Constant(5, 0.2));
  const vector<int> t4{0, 1, 2, 3};
  CHECK(std::abs(cross_entropy<double>(uniform, t4) - std::log(5.0)) < 1e-12);

  const vector<Vd> p{(Vd(3) << 0.5, 0.25, 0.25).finished()};
  CHECK(cross_entropy<double>(p, t1) == doctest::Approx(1.3863).epsilon(1e-4));
  CHECK(std::abs(cross_entropy<double>(p, t1) + std::log(0.25)) < 1e-15);

  const vector<Vd> two{(Vd(2) << 0.5, 0.5).finished(), (Vd(2) << 0.1, 0.9).finished()};
  const vector<int> t2{0, 0};
  CHECK(std::abs(cross_entropy<double>(two, t2, {false, true}) + std::log(0.1)) < 1e-15);
  CHECK_THROWS(cross_entropy<double>(two, t2, {false, false}));
  CHECK_THROWS(cross_entropy<double>(two, t1));
}

TEST_CASE("backward passes grad_check on tiny models") {
  Lcg64 rng(1);
  const ModelDims dims{6, 6, 4, 5, 5};
  // Coordinates with |g| below ~1e-7 sit at the finite-difference noise
  // floor (one ulp of the loss over 2 eps), so the check runs at
  // initialisation-scale parameters rather than arbitrary random ones.
  for (int trial = 0; trial < 3; ++trial) {
    auto params = init_params<double>(dims, uint64_t(trial));
    const auto batch = random_batch(rng, dims, 1 + trial);
    ModelParams<double> grads;
    const double loss = backward<double>(batch, params, grads);
    CHECK(std::abs(loss - batch_loss<double>(batch, params)) < 1e-12);
    auto blocks = grad_blocks(params, grads);
    const auto r =
        grad_check([&] { return batch_loss<double>(batch, params); }, blocks, {.seed = uint64_t(trial)});
    for (const auto& b : r.blocks) CHECK_MESSAGE(b.max_rel_error < 1e-4, b.name);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("backward: output bias gradient is the mean of p - onehot") {
  Lcg64 rng(2);
  const ModelDims dims{7, 6, 3, 4, 4};
  const auto params = random_params(rng, dims, 0.5);
  const auto batch = random_batch(rng, dims, 1);
  ModelParams<double> grads;
  backward<double>(batch, params, grads);
  const auto steps = forward_teacher_forced<double>(batch[0].input, batch[0].target, params);
  Vd expect = Vd::Zero(6);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    expect += steps[t].probs;
    expect(batch[0].target[t + 1]) -= 1.0;
  }
  expect /= double(steps.size());
  CHECK((grads.output_b - expect).cwiseAbs().maxCoeff() < 1e-12);

  // Shapes mirror the parameters block for block.
  vector<std::pair<long, long>> ps, gs;
  params.for_each([&](const std::string&, const auto& b) { ps.emplace_back(b.rows(), b.cols()); });
  grads.for_each([&](const std::string&, const auto& b) { gs.emplace_back(b.rows(), b.cols()); });
  CHECK(ps == gs);
  CHECK(grads.dims == params.dims);
}

TEST_CASE("batch gradient equals the mean of per-item gradients") {
  Lcg64 rng(3);
  const ModelDims dims{8, 7, 4, 6, 5};
  const auto params = random_params(rng, dims, 0.5);
  const auto batch = random_batch(rng, dims, 6);

  ModelParams<double> grads, item;
  backward<double>(batch, params, grads);
  vector<double> mean(flatten(grads).size(), 0.0);
  for (const auto& e : batch) {
    backward<double>(std::span(&e, 1), params, item);
    const auto f = flatten(item);
    for (std::size_t i = 0; i < f.size(); ++i) mean[i] += f[i] / double(batch.size());
  }
  const auto g = flatten(grads);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(g[i] - mean[i]));
  CHECK(worst < 1e-12);

  // Single precision, and order of items in the batch does not matter.
  const auto pf = params.cast<float>();
  ModelParams<float> gf, gr, itf;
  backward<float>(batch, pf, gf);
  auto reversed = batch;
  std::reverse(reversed.begin(), reversed.end());
  backward<float>(reversed, pf, gr);
  vector<double> meanf(mean.size(), 0.0);
  for (const auto& e : batch) {
    backward<float>(std::span(&e, 1), pf, itf);
    const auto f = flatten(itf);
    for (std::size_t i = 0; i < f.size(); ++i) meanf[i] += f[i] / double(batch.size());
  }
  const auto a = flatten(gf), b = flatten(gr);
  worst = 0.0;
  double worst_order = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - meanf[i]));
    worst_order = std::max(worst_order, std::abs(a[i] - b[i]));
  }
  CHECK(worst < 1e-6);
  CHECK(worst_order < 1e-6);
}

TEST_CASE("backward errors") {
  const ModelDims dims{6, 6, 3, 4, 4};
  const auto params = ModelParams<double>::zeros(dims);
  ModelParams<double> grads;
  CHECK_THROWS(backward<double>(std::span<const EncodedEntry>{}, params, grads));
  const vector<EncodedEntry> padded{{{4, 0, 2}, {1, 4, 2}}};
  CHECK_THROWS(backward<double>(padded, params, grads));
  const vector<EncodedEntry> framing{{{4, 2}, {4, 2}}};
  CHECK_THROWS(backward<double>(framing, params, grads));
}

TEST_CASE("clip_global_norm") {
  auto g = ModelParams<double>::zeros({5, 5, 2, 2, 2});
  g.output_b.setConstant(3.0);  // norm 3 * sqrt(5)
  const double before = clip_global_norm(g, 1.0);
  CHECK(before == doctest::Approx(3.0 * std::sqrt(5.0)));
  double sq = 0.0;
  for (double v : flatten(g)) sq += v * v;
  CHECK(std::sqrt(sq) == doctest::Approx(1.0));
  const auto kept = flatten(g);
  clip_global_norm(g, 10.0);
  CHECK(flatten(g) == kept);
  clip_global_norm(g, 0.0);
  CHECK(flatten(g) == kept);
}

TEST_CASE("adam_step") {
  const ModelDims dims{5, 5, 1, 1, 1};
  Lcg64 rng(4);
  auto params = random_params(rng, dims, 1.0);
  const auto start = params;
  auto state = AdamState<double>::zeros(dims);
  const AdamConfig config;
  CHECK(config.learning_rate == 0.001);
  CHECK(config.beta1 == 0.9);
  CHECK(config.beta2 == 0.999);

  adam_step(params, ModelParams<double>::zeros(dims), state, config);
  CHECK(flatten(params) == flatten(start));
  CHECK(state.step == 1);

  // First real step moves each coordinate by about lr against the gradient sign.
  params = start;
  state = AdamState<double>::zeros(dims);
  auto grads = random_params(rng, dims, 2.0);
  adam_step(params, grads, state, config);
  const auto p0 = flatten(start), p1 = flatten(params), g = flatten(grads);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double expect = -config.learning_rate * (g[i] > 0 ? 1 : g[i] < 0 ? -1 : 0);
    CHECK(std::abs((p1[i] - p0[i]) - expect) < 1e-7);
  }

  // beta1 = beta2 = b and the same gradient twice: m = v / g = (1 - b^2) g.
  const double b = 0.8;
  const AdamConfig same{0.01, b, b, 1e-8};
  params = start;
  state = AdamState<double>::zeros(dims);
  adam_step(params, grads, state, same);
  adam_step(params, grads, state, same);
  CHECK(state.step == 2);
  const auto m = flatten(state.first_moment), v = flatten(state.second_moment);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(std::abs(m[i] - (1 - b * b) * g[i]) < 1e-15);
    CHECK(std::abs(v[i] - (1 - b * b) * g[i] * g[i]) < 1e-14);
  }

  auto wrong = ModelParams<double>::zeros({5, 6, 1, 1, 1});
  CHECK_THROWS_AS(adam_step(params, wrong, state, same), ShapeError);
}

TEST_CASE("TrainConfig defaults and validation") {
  TrainConfig c;
  CHECK(c.learning_rate == 0.001);
  CHECK(c.epochs == 50);
  CHECK(c.batch_size == 64);
  CHECK(c.patience == 5);
  CHECK(c.lr_decay == 0.5);
  CHECK(c.min_lr == 1e-5);
  CHECK(c.clip_norm == 5.0);
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS(bad([](TrainConfig& c) { c.learning_rate = 0; }).validate());
  CHECK_THROWS(bad([](TrainConfig& c) { c.beta1 = 1; }).validate());
  CHECK_THROWS(bad([](TrainConfig& c) { c.beta2 = 0; }).validate());
  CHECK_THROWS(bad([](TrainConfig& c) { c.batch_size = 0; }).validate());
  CHECK_THROWS(bad([](TrainConfig& c) { c.patience = 0; }).validate());
  CHECK_THROWS(bad([](TrainConfig& c) { c.lr_decay = 1; }).validate());
  CHECK_THROWS(bad([](TrainConfig& c) { c.epochs = -1; }).validate());
  CHECK_THROWS(bad([](TrainConfig& c) { c.hidden = 0; }).validate());
}

TEST_CASE("train: zero epochs returns the initial parameters") {
  DatasetSplit split;
  split.train = toy_lexicon();
  TrainConfig c;
  c.epochs = 0;
  c.hidden = 16;
  c.embed = 8;
  c.seed = 9;
  const auto r = train(split, c);
  CHECK(r.history.epochs.empty());
  CHECK(r.best_epoch == 0);
  const auto init = init_params<float>(r.model.params.dims, 9);
  CHECK(flatten(r.model.params) == flatten(init));
  CHECK(r.model.params.dims.attention == 16);
  CHECK(r.model.metadata.at("train.seed") == "9");

  CHECK_THROWS(train(DatasetSplit{}, c));
}

TEST_CASE("train: determinism, history and best checkpoint") {
  const auto lex = toy_lexicon();
  const auto split = split_dataset(lex, 3);
  TrainConfig c;
  c.epochs = 12;
  c.hidden = 16;
  c.embed = 8;
  c.batch_size = 8;
  c.learning_rate = 0.01;
  c.patience = 2;
  c.seed = 5;
  int calls = 0;
  const auto a = train(split, c, [&](const EpochRecord&) { ++calls; });
  const auto b = train(split, c);
  CHECK(calls == 12);
  REQUIRE(a.history.epochs.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(a.history.epochs[i].epoch == int(i) + 1);
    CHECK(a.history.epochs[i].train_loss == b.history.epochs[i].train_loss);
    CHECK(a.history.epochs[i].val_loss == b.history.epochs[i].val_loss);
    CHECK(a.history.epochs[i].val_word_acc == b.history.epochs[i].val_word_acc);
    CHECK(a.history.epochs[i].learning_rate == b.history.epochs[i].learning_rate);
  }
  CHECK(flatten(a.model.params) == flatten(b.model.params));

  vector<EncodedEntry> val;
  for (const auto& e : split.validation) val.push_back(encode_entry(e, a.model.vocabs));
  const double returned = batch_loss<float>(val, a.model.params);
  for (const auto& rec : a.history.epochs) CHECK(returned <= rec.val_loss);
  CHECK(returned == a.history.epochs[a.best_epoch - 1].val_loss);

  // Learning rate only ever decays, never below the floor.
  for (std::size_t i = 1; i < 12; ++i) {
    CHECK(a.history.epochs[i].learning_rate <= a.history.epochs[i - 1].learning_rate);
    CHECK(a.history.epochs[i].learning_rate >= c.min_lr);
  }

  std::ostringstream csv;
  a.history.write_csv(csv);
  const auto text = csv.str();
  CHECK(text.starts_with("epoch,train_loss,val_loss,val_word_acc,lr\n1,"));
  CHECK(std::count(text.begin(), text.end(), '\n') == 13);
}

TEST_CASE("train: plateau schedule on a validation set that cannot improve") {
  // Validation words share no symbols with training, so validation loss
  // quickly stops improving and the rate must halve every `patience` epochs.
  DatasetSplit split;
  split.train = {{"AB", {"X"}}, {"BA", {"Y"}}};
  split.validation = {{"CC", {"Z", "Z", "Z"}}};
  TrainConfig c;
  c.epochs = 30;
  c.hidden = 4;
  c.embed = 2;
  c.learning_rate = 0.05;
  c.patience = 3;
  c.track_word_accuracy = false;
  const auto r = train(split, c);
  const auto& h = r.history.epochs;
  int decays = 0;
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i].learning_rate < h[i - 1].learning_rate) {
      ++decays;
      CHECK(h[i].learning_rate == doctest::Approx(std::max(h[i - 1].learning_rate * 0.5, c.min_lr)));
    }
  }
  CHECK(decays >= 2);
}
