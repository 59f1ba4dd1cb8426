#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cat/knowledge_base.hpp"
#include "cat/kta.hpp"
#include "cat/mask_store.hpp"
#include "cat/rng.hpp"
#include "oracles.hpp"

using cat::KbConfig;
using cat::KnowledgeBase;
using cat::KtaBlock;
using cat::KtaConfig;
using cat::MaskStore;
using cat::Parameter;
using cat::Rng;
using cat::Shape;
using cat::Tape;
using cat::TaskMask;
using cat::Tensor;

namespace {

KtaConfig small_cfg(std::size_t width = 10, std::size_t heads = 5) {
  KtaConfig cfg;
  cfg.width = width;
  cfg.heads = heads;
  cfg.dropout = 0.5;
  return cfg;
}

Tensor random_batch(std::size_t n, std::size_t d, Rng& rng) {
  Tensor x(Shape{n, d});
  for (auto& v : x.v) v = rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST_CASE("attention config validation", "[kta]") {
  Rng rng(1);
  REQUIRE_THROWS_AS(KtaBlock(small_cfg(10, 3), 4, rng), cat::ConfigError);
  REQUIRE_THROWS_AS(KtaBlock(small_cfg(10, 0), 4, rng), cat::ConfigError);
  KtaBlock ok(small_cfg(10, 5), 4, rng);
  Tape t;
  Rng unused(0);
  REQUIRE_THROWS_AS(ok.attend(t, {}, false, unused), cat::InputError);
}

TEST_CASE("attention weight structure", "[kta]") {
  Rng rng(2);
  KtaBlock block(small_cfg(), 3, rng);

  SECTION("a single similar task gets weight exactly one") {
    Tape t;
    Rng unused(0);
    auto h = t.input(random_batch(4, 10, rng));
    auto att = block.attend(t, {h}, false, unused);
    REQUIRE(att.weights.size() == 5);
    for (auto wv : att.weights)
      for (double a : t.val(wv).v) REQUIRE(a == 1.0);
  }
  SECTION("identical features split the weight evenly") {
    Tensor feats = random_batch(4, 10, rng);
    Tape t;
    Rng unused(0);
    auto h1 = t.input_view(feats);
    auto h2 = t.input_view(feats);
    auto att = block.attend(t, {h1, h2}, false, unused);
    for (auto wv : att.weights)
      for (double a : t.val(wv).v) REQUIRE_THAT(a, Catch::Matchers::WithinAbs(0.5, 1e-15));
  }
  SECTION("weights form a distribution per head and row") {
    Rng local(3);
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t n = 1 + local.below(5);
      Tape t;
      Rng unused(0);
      std::vector<Tape::Var> hs;
      for (std::size_t i = 0; i < n; ++i) hs.push_back(t.input(random_batch(3, 10, local)));
      auto att = block.attend(t, hs, false, unused);
      for (auto wv : att.weights) {
        const Tensor& w = t.val(wv);
        REQUIRE(w.rows() == 3);
        REQUIRE(w.cols() == n);
        for (std::size_t r = 0; r < 3; ++r) {
          double sum = 0.0;
          for (std::size_t c = 0; c < n; ++c) {
            REQUIRE(w.at(r, c) >= 0.0);
            sum += w.at(r, c);
          }
          REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
        }
      }
    }
  }
}

TEST_CASE("attention matches the straight-line reimplementation", "[kta]") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t width = 10, heads = 5;
    const std::size_t n = 1 + rng.below(5);
    const std::size_t batch = 1 + rng.below(8);
    KtaBlock block(small_cfg(width, heads), 3, rng);

    std::vector<Tensor> feats;
    for (std::size_t i = 0; i < n; ++i) feats.push_back(random_batch(batch, width, rng));

    Tape t;
    Rng unused(0);
    std::vector<Tape::Var> hs;
    for (const auto& f : feats) hs.push_back(t.input_view(f));
    auto att = block.attend(t, hs, false, unused);

    auto oracle = oracles::brute_force_attention(
        block.query_embedding().t.v, feats, block.proj_q().t, block.proj_k().t,
        block.proj_v().t, heads);

    for (std::size_t h = 0; h < heads; ++h) {
      const Tensor& w = t.val(att.weights[h]);
      for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t i = 0; i < n; ++i)
          REQUIRE_THAT(w.at(r, i), Catch::Matchers::WithinAbs(oracle.weights[h][r][i], 1e-10));
    }
    const Tensor& mix = t.val(att.pre_norm);
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t j = 0; j < width; ++j)
        REQUIRE_THAT(mix.at(r, j), Catch::Matchers::WithinAbs(oracle.output[r][j], 1e-10));
  }
}

TEST_CASE("permuting the similar-task list permutes weights and preserves output", "[kta]") {
  Rng rng(8);
  KtaBlock block(small_cfg(), 4, rng);
  std::vector<Tensor> feats;
  for (int i = 0; i < 4; ++i) feats.push_back(random_batch(3, 10, rng));
  const std::vector<std::size_t> perm{2, 0, 3, 1};

  Tape t1, t2;
  Rng u1(0), u2(0);
  std::vector<Tape::Var> hs1, hs2;
  for (const auto& f : feats) hs1.push_back(t1.input_view(f));
  for (std::size_t i : perm) hs2.push_back(t2.input_view(feats[i]));
  auto a1 = block.attend(t1, hs1, false, u1);
  auto a2 = block.attend(t2, hs2, false, u2);

  for (std::size_t h = 0; h < 5; ++h) {
    const Tensor& w1 = t1.val(a1.weights[h]);
    const Tensor& w2 = t2.val(a2.weights[h]);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t i = 0; i < perm.size(); ++i)
        REQUIRE_THAT(w2.at(r, i), Catch::Matchers::WithinAbs(w1.at(r, perm[i]), 1e-14));
  }
  const auto& o1 = t1.val(a1.h).v;
  const auto& o2 = t2.val(a2.h).v;
  for (std::size_t i = 0; i < o1.size(); ++i)
    REQUIRE_THAT(o2[i], Catch::Matchers::WithinAbs(o1[i], 1e-12));
}

TEST_CASE("attention gradients match finite differences", "[kta]") {
  Rng rng(9);
  KtaBlock block(small_cfg(), 3, rng);
  std::vector<Tensor> feats;
  for (int i = 0; i < 3; ++i) feats.push_back(random_batch(4, 10, rng));
  std::vector<std::size_t> labels{0, 1, 2, 1};

  auto build = [&](Tape& t) {
    Rng unused(0);
    std::vector<Tape::Var> hs;
    for (const auto& f : feats) hs.push_back(t.input_view(f));
    auto att = block.attend(t, hs, false, unused);
    return t.softmax_cross_entropy(block.classify(t, att.h), labels);
  };
  {
    Tape t;
    t.backward(build(t));
  }
  auto loss = [&] {
    Tape t;
    return t.val(build(t)).v[0];
  };
  REQUIRE(oracles::max_grad_error(block.params(), loss) < 1e-5);
  for (Parameter* p : block.params()) p->t.drop_grad();
}

TEST_CASE("joint loss is the sum of both cross entropies", "[kta]") {
  Rng rng(12);
  KbConfig kcfg;
  kcfg.input_width = 4;
  kcfg.width = 10;
  KnowledgeBase kb(kcfg, rng);
  kb.register_task(0, 3, rng);
  kb.register_task(1, 3, rng);
  kb.register_task(2, 3, rng);
  MaskStore store(10);
  store.save(0, kb);
  store.save(1, kb);
  KtaBlock block(small_cfg(), 3, rng);

  Tensor x = random_batch(6, 4, rng);
  std::vector<std::size_t> labels{0, 1, 2, 0, 1, 2};

  SECTION("with similar predecessors") {
    Tape t;
    Rng drop(0);
    auto jf = cat::joint_forward(t, kb, &block, store, {0, 1}, t.input_view(x), labels, 2,
                                 5.0, false, drop);
    REQUIRE(jf.kta_logits.valid());
    Tape tm;
    Rng d2(0);
    auto only_mask = cat::joint_forward(tm, kb, nullptr, store, {}, tm.input_view(x), labels,
                                        2, 5.0, false, d2);
    const double l_mask = tm.val(only_mask.loss).v[0];
    const double l_kta = t.val(t.softmax_cross_entropy(jf.kta_logits, labels)).v[0];
    REQUIRE_THAT(t.val(jf.loss).v[0],
                 Catch::Matchers::WithinRel(l_mask + l_kta, 1e-12));
  }
  SECTION("no similar predecessors reduces to the single term") {
    Tape t;
    Rng drop(0);
    auto jf = cat::joint_forward(t, kb, &block, store, {}, t.input_view(x), labels, 2, 5.0,
                                 false, drop);
    REQUIRE_FALSE(jf.kta_logits.valid());
    REQUIRE(jf.attention_weights.empty());
    Tape t2;
    Rng d2(0);
    auto fwd = kb.forward_masked(t2, t2.input_view(x), 2, 5.0, false, d2);
    const double expect =
        t2.val(t2.softmax_cross_entropy(kb.classify_mask_head(t2, fwd.h2_drop, 2), labels))
            .v[0];
    REQUIRE_THAT(t.val(jf.loss).v[0], Catch::Matchers::WithinRel(expect, 1e-12));
  }
  SECTION("similar tasks without a block is a state error") {
    Tape t;
    Rng drop(0);
    REQUIRE_THROWS_AS(cat::joint_forward(t, kb, nullptr, store, {0}, t.input_view(x), labels,
                                         2, 5.0, false, drop),
                      cat::StateError);
  }
}

TEST_CASE("transfer branch updates similar units and spares dissimilar ones", "[kta]") {
  Rng rng(15);
  KbConfig kcfg;
  kcfg.input_width = 4;
  kcfg.width = 10;
  KnowledgeBase kb(kcfg, rng);
  kb.register_task(0, 3, rng);  // similar predecessor
  kb.register_task(1, 3, rng);  // dissimilar predecessor
  kb.register_task(2, 3, rng);

  MaskStore store(10);
  store.put(0, TaskMask{{1, 1, 1, 0, 0, 0, 0, 0, 0, 0}, {1, 1, 1, 0, 0, 0, 0, 0, 0, 0}});
  store.put(1, TaskMask{{0, 0, 0, 1, 1, 1, 0, 0, 0, 0}, {0, 0, 0, 1, 1, 1, 0, 0, 0, 0}});

  // push task 2's own gates away from every unit below index 6, so only the
  // transfer branch can touch the similar task's units
  auto& sl = kb.slot(2);
  for (std::size_t i = 0; i < 10; ++i) {
    sl.e1.t.v[i] = i < 6 ? -1.0 : 1.0;
    sl.e2.t.v[i] = i < 6 ? -1.0 : 1.0;
  }

  cat::install_blocking_hooks(kb, store.accumulate({1}));
  KtaBlock block(small_cfg(), 3, rng);

  const auto w1_snap = kb.layer1_w().t.v;
  const auto w2_snap = kb.layer2_w().t.v;

  Tensor x = random_batch(8, 4, rng);
  std::vector<std::size_t> labels{0, 1, 2, 0, 1, 2, 0, 1};
  for (int step = 0; step < 3; ++step) {
    Tape t;
    auto jf = cat::joint_forward(t, kb, &block, store, {0}, t.input_view(x), labels, 2, 140.0,
                                 false, rng);
    t.backward(jf.loss);
    std::vector<Parameter*> params = kb.shared_params();
    for (Parameter* p : kb.task_params(2)) params.push_back(p);
    for (Parameter* p : block.params()) params.push_back(p);
    cat::sgd_step(params, 0.05);
  }
  cat::remove_blocking_hooks(kb);

  bool similar_unit_moved = false;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t o = 0; o < 3; ++o)
      if (kb.layer1_w().t.v[i * 10 + o] != w1_snap[i * 10 + o]) similar_unit_moved = true;
  REQUIRE(similar_unit_moved);

  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t o = 3; o < 6; ++o)
      REQUIRE(kb.layer1_w().t.v[i * 10 + o] == w1_snap[i * 10 + o]);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t o = 3; o < 6; ++o)
      REQUIRE(kb.layer2_w().t.v[i * 10 + o] == w2_snap[i * 10 + o]);
}
