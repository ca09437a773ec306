#include <doctest.h>

#include <cmath>
#include <functional>

#include "g2p/decode.h"
#include "g2p/error.h"
#include "g2p/seq2seq.h"
#include "test_util.h"

using namespace g2p;
using std::vector;

namespace {

ModelParams<double> random_params(Lcg64& rng, const ModelDims& dims, double scale) {
  auto p = ModelParams<double>::zeros(dims);
  g2p::testing::randomize(p, rng, scale);
  return p;
}

vector<int> random_word(Lcg64& rng, int len, int vocab) {
  vector<int> w;
  for (int i = 0; i < len; ++i) w.push_back(4 + int(rng.below(vocab - 4)));
  w.push_back(Vocabulary::kEos);
  return w;
}

struct Leaf {
  vector<int> ids;
  double log_prob;
  bool terminated;
};

// Every leaf of the depth-limited prefix tree.
vector<Leaf> enumerate(std::span<const int> input, const ModelParams<double>& p, int max_len) {
  const auto enc = encode<double>(input, p);
  vector<Leaf> leaves;
  std::function<void(int, const Vec<double>&, vector<int>&, double)> walk =
      [&](int prev, const Vec<double>& s, vector<int>& prefix, double lp) {
        const auto out = decode_step<double>(prev, s, enc, p);
        for (int k = 0; k < p.dims.phoneme_vocab; ++k) {
          const double l = lp + std::log(out.probs(k));
          if (k == Vocabulary::kEos) {
            leaves.push_back({prefix, l, true});
          } else if (int(prefix.size()) + 1 == max_len) {
            prefix.push_back(k);
            leaves.push_back({prefix, l, false});
            prefix.pop_back();
          } else {
            prefix.push_back(k);
            walk(k, out.state, prefix, l);
            prefix.pop_back();
          }
        }
      };
  vector<int> prefix;
  walk(Vocabulary::kSos, enc.final_state, prefix, 0.0);
  return leaves;
}

void check_invariants(const DecodeResult& r) {
  double sum = 0.0;
  for (double v : r.step_log_probs) sum += v;
  CHECK(std::abs(sum - r.log_prob) < 1e-9);
  CHECK(r.attention.rows() == Eigen::Index(r.step_log_probs.size()));
  for (Eigen::Index t = 0; t < r.attention.rows(); ++t)
    CHECK(std::abs(r.attention.row(t).sum() - 1.0) < 1e-6);
  CHECK(r.step_log_probs.size() == r.ids.size() + (r.terminated ? 1 : 0));
}

Model tiny_text_model() {
  Model m;
  const std::vector<LexiconEntry> lex{{"AB", {"X", "Y"}}, {"BC", {"Y"}}};
  m.vocabs = build_vocabs(lex);
  Lcg64 rng(31);
  auto p = random_params(rng, {m.vocabs.graphemes.size(), m.vocabs.phonemes.size(), 3, 4, 4}, 1.0);
  m.params = p.cast<float>();
  return m;
}

}  // namespace

TEST_CASE("default_max_len") {
  CHECK(default_max_len(1) == 7);
  CHECK(default_max_len(10) == 25);
  CHECK(default_max_len(22) == 49);
  CHECK(default_max_len(23) == 50);
  CHECK(default_max_len(100) == 50);
}

TEST_CASE("greedy: immediate EOS and truncation") {
  const ModelDims dims{6, 6, 3, 4, 4};
  auto p = ModelParams<double>::zeros(dims);
  p.output_b(Vocabulary::kEos) = 50.0;
  const vector<int> x{4, 5, 2};
  const auto r = greedy_decode<double>(x, p, 10);
  CHECK(r.ids.empty());
  CHECK(r.terminated);
  CHECK(r.step_log_probs.size() == 1);
  check_invariants(r);

  p.output_b(Vocabulary::kEos) = 0.0;
  p.output_b(4) = 50.0;
  const auto t = greedy_decode<double>(x, p, 1);
  CHECK(t.ids == vector<int>{4});
  CHECK_FALSE(t.terminated);
  check_invariants(t);

  CHECK_THROWS(greedy_decode<double>(x, p, 0));
  CHECK_THROWS(greedy_decode<double>(vector<int>{}, p, 3));
}

TEST_CASE("greedy: ties go to the lowest id") {
  const ModelDims dims{6, 6, 3, 4, 4};
  auto p = ModelParams<double>::zeros(dims);
  p.output_b(5) = 1.0;
  p.output_b(4) = 1.0;
  const auto r = greedy_decode<double>(vector<int>{4, 2}, p, 3);
  CHECK(r.ids == vector<int>{4, 4, 4});
  const auto b = beam_decode<double>(vector<int>{4, 2}, p, 1, 3);
  CHECK(b.front().ids == r.ids);
}

TEST_CASE("beam width 1 equals greedy") {
  Lcg64 rng(1);
  const ModelDims dims{10, 8, 4, 6, 5};
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_params(rng, dims, 1.5);
    const auto pf = p.cast<float>();
    for (int w = 0; w < 4; ++w) {
      const auto x = random_word(rng, 1 + int(rng.below(8)), dims.grapheme_vocab);
      const int len = 1 + int(rng.below(12));
      const auto g = greedy_decode<float>(x, pf, len);
      const auto b = beam_decode<float>(x, pf, 1, len);
      REQUIRE(b.size() == 1);
      CHECK(b[0].ids == g.ids);
      CHECK(b[0].terminated == g.terminated);
      CHECK(b[0].log_prob == g.log_prob);
      CHECK(b[0].step_log_probs == g.step_log_probs);
      CHECK(b[0].attention == g.attention);
    }
  }
}

TEST_CASE("beam at saturation equals brute force") {
  Lcg64 rng(2);
  const ModelDims dims{7, 4, 3, 4, 4};
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_params(rng, dims, 2.0);
    const auto x = random_word(rng, 1 + int(rng.below(4)), dims.grapheme_vocab);
    const auto leaves = enumerate(x, p, 3);
    double mass = 0.0;
    const Leaf* best = &leaves[0];
    for (const auto& l : leaves) {
      mass += std::exp(l.log_prob);
      if (l.log_prob > best->log_prob || (l.log_prob == best->log_prob && l.ids < best->ids))
        best = &l;
    }
    CHECK(std::abs(mass - 1.0) < 1e-6);
    const auto beam = beam_decode<double>(x, p, 64, 3);
    CHECK(beam.front().ids == best->ids);
    CHECK(beam.front().terminated == best->terminated);
    CHECK(std::abs(beam.front().log_prob - best->log_prob) < 1e-12);

    // With no pruning the beam returns every leaf, best first.
    const auto all = beam_decode<double>(x, p, 1000, 3);
    CHECK(all.size() == leaves.size());
    for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i].log_prob <= all[i - 1].log_prob);
    for (const auto& r : all) check_invariants(r);
  }
}

TEST_CASE("wider beams never find a worse top hypothesis") {
  Lcg64 rng(3);
  const ModelDims dims{12, 9, 4, 8, 6};
  const auto p = random_params(rng, dims, 1.2).cast<float>();
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_word(rng, 1 + int(rng.below(8)), dims.grapheme_vocab);
    double prev = -INFINITY;
    for (int w : {1, 2, 3, 5, 8, 16}) {
      const auto r = beam_decode<float>(x, p, w, 8);
      REQUIRE(r.size() <= std::size_t(w));
      for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i].log_prob <= r[i - 1].log_prob);
      CHECK(r.front().log_prob >= prev);
      prev = r.front().log_prob;
    }
  }
}

TEST_CASE("length normalisation ranks by mean step log-prob") {
  Lcg64 rng(4);
  const ModelDims dims{8, 5, 3, 4, 4};
  const auto p = random_params(rng, dims, 2.0);
  const auto x = random_word(rng, 3, dims.grapheme_vocab);
  const auto r = beam_decode<double>(x, p, 1000, 3, true);
  for (std::size_t i = 1; i < r.size(); ++i)
    CHECK(r[i].log_prob / double(r[i].step_log_probs.size()) <=
          r[i - 1].log_prob / double(r[i - 1].step_log_probs.size()));
  CHECK_THROWS(beam_decode<double>(x, p, 0, 3));
}

TEST_CASE("text front ends") {
  const auto m = tiny_text_model();
  const auto g = greedy_decode("ab", m);
  CHECK(g.tokens.size() == g.ids.size());
  for (std::size_t i = 0; i < g.ids.size(); ++i) CHECK(g.tokens[i] == m.vocabs.phonemes.token(g.ids[i]));
  CHECK(g.step_log_probs.size() <= std::size_t(default_max_len(2)));
  CHECK(g.attention.cols() == 3);

  const auto b = beam_decode("AB", m, 1);
  CHECK(b.front().tokens == g.tokens);

  // Unknown graphemes decode through UNK rather than failing.
  CHECK_NOTHROW(greedy_decode("AQZ", m));
  CHECK_THROWS_AS(greedy_decode("", m), InvalidArgument);
  CHECK_THROWS_AS(greedy_decode("   ", m), InvalidArgument);
  CHECK_THROWS_AS(beam_decode("AB", m, 0), InvalidArgument);
}
