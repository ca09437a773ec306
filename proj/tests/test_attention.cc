#include <doctest.h>

#include <cmath>

#include "g2p/attention.h"
#include "g2p/error.h"
#include "test_util.h"

using namespace g2p;
using Vd = Vec<double>;
using Md = Mat<double>;

namespace {

AttentionParams<double> random_params(Lcg64& rng, int enc, int dec, int att) {
  auto p = AttentionParams<double>::zeros(enc, dec, att);
  g2p::testing::randomize(p, rng, 1.0);
  return p;
}

Md random_states(Lcg64& rng, int n, int h) {
  Md m(n, h);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1, 1);
  return m;
}

}  // namespace

TEST_CASE("alignment_scores examples") {
  Lcg64 rng(1);
  auto p = random_params(rng, 3, 2, 4);
  const Md h = random_states(rng, 5, 3);
  const Vd s = (Vd(2) << 0.3, -0.7).finished();

  auto zero_v = p;
  zero_v.v.setZero();
  CHECK(alignment_scores<double>(h, s, zero_v).isZero(0.0));

  Md same(4, 3);
  same.rowwise() = h.row(0);
  const Vd e = alignment_scores<double>(same, s, p);
  for (int i = 1; i < 4; ++i) CHECK(e(i) == e(0));

  AttentionParams<double> one{Md::Constant(1, 1, 1.0), Md::Zero(1, 1), Vd::Zero(1), Vd::Ones(1)};
  const Md hs = (Md(2, 1) << 0.5, -0.5).finished();
  const Vd e1 = alignment_scores<double>(hs, Vd::Zero(1), one);
  CHECK(e1(0) == doctest::Approx(0.4621).epsilon(1e-4));
  CHECK(e1(1) == doctest::Approx(-0.4621).epsilon(1e-4));
  CHECK(std::abs(e1(0) - std::tanh(0.5)) < 1e-15);

  const Md keys = h * p.w_enc.transpose();
  CHECK((alignment_scores_from_keys<double>(keys, s, p) - alignment_scores<double>(h, s, p))
            .cwiseAbs()
            .maxCoeff() < 1e-14);

  CHECK_THROWS(alignment_scores<double>(Md(0, 3), s, p));
  CHECK_THROWS_AS(alignment_scores<double>(random_states(rng, 2, 4), s, p), ShapeError);
  CHECK_THROWS_AS(alignment_scores<double>(h, Vd::Zero(3), p), ShapeError);
}

TEST_CASE("attention_weights examples") {
  const Vd w = attention_weights<double>(Vd::Constant(4, 0.7));
  for (int i = 0; i < 4; ++i) CHECK(w(i) == doctest::Approx(0.25).epsilon(1e-15));

  const Vd m = attention_weights<double>(Vd::Zero(2), {true, false});
  CHECK(m(0) == 1.0);
  CHECK(m(1) == 0.0);

  const Vd l = attention_weights<double>((Vd(2) << std::log(2.0), 0).finished());
  CHECK(std::abs(l(0) - 2.0 / 3) < 1e-15);
  CHECK(std::abs(l(1) - 1.0 / 3) < 1e-15);

  CHECK_THROWS(attention_weights<double>(Vd::Zero(2), {false, false}));
  CHECK_THROWS(attention_weights<double>(Vd::Zero(3), {true, false}));
}

TEST_CASE("context_vector examples") {
  Lcg64 rng(2);
  const Md h = random_states(rng, 3, 4);
  const Vd onehot = (Vd(3) << 0, 1, 0).finished();
  CHECK(context_vector<double>(onehot, h) == h.row(1).transpose());
  const Vd uniform = Vd::Constant(3, 1.0 / 3);
  CHECK((context_vector<double>(uniform, h) - h.colwise().mean().transpose()).norm() < 1e-15);

  const Md eye = Md::Identity(2, 2);
  const Vd c = context_vector<double>((Vd(2) << 0.25, 0.75).finished(), eye);
  CHECK(c(0) == 0.25);
  CHECK(c(1) == 0.75);
  CHECK_THROWS(context_vector<double>(Vd::Ones(2), h));
}

TEST_CASE("attention invariants over random inputs") {
  Lcg64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + int(rng.below(8)), enc = 1 + int(rng.below(6)), dec = 1 + int(rng.below(6));
    const auto p = random_params(rng, enc, dec, 1 + int(rng.below(6)));
    const Md h = random_states(rng, n, enc);
    Vd s(dec);
    for (auto& v : s) v = rng.uniform(-1, 1);
    std::vector<bool> mask(n);
    int live = 0;
    for (int i = 0; i < n; ++i) live += (mask[i] = rng.below(4) != 0);
    if (live == 0) mask[rng.below(n)] = true;

    const Vd e = alignment_scores<double>(h, s, p);
    const Vd a = attention_weights<double>(e, mask);
    REQUIRE(std::abs(a.sum() - 1.0) < 1e-6);
    REQUIRE(a.minCoeff() >= 0.0);
    for (int i = 0; i < n; ++i)
      if (!mask[i]) REQUIRE(a(i) == 0.0);

    const Vd shifted = attention_weights<double>((e.array() + rng.uniform(-50, 50)).matrix(), mask);
    REQUIRE((shifted - a).cwiseAbs().maxCoeff() < 1e-9);

    const Vd c = context_vector<double>(a, h);
    REQUIRE(c.size() == enc);
    for (int d = 0; d < enc; ++d) {
      REQUIRE(c(d) >= h.col(d).minCoeff() - 1e-9);
      REQUIRE(c(d) <= h.col(d).maxCoeff() + 1e-9);
    }
  }
}

TEST_CASE("single unmasked position selects that state exactly") {
  Lcg64 rng(4);
  const Md h = random_states(rng, 5, 3);
  Vd e(5);
  for (auto& v : e) v = rng.uniform(-5, 5);
  const Vd a = attention_weights<double>(e, {false, false, false, true, false});
  CHECK(a(3) == 1.0);
  CHECK(context_vector<double>(a, h) == h.row(3).transpose());
}
