#pragma once

#include <cstddef>
#include <vector>

#include "cat/autodiff.hpp"
#include "cat/dataset.hpp"
#include "cat/errors.hpp"
#include "cat/knowledge_base.hpp"
#include "cat/mask_store.hpp"
#include "cat/rng.hpp"
#include "cat/training.hpp"

namespace cat {

struct SimilarityConfig {
  double lr = 0.05;
  std::size_t batch = 64;
  std::size_t patience = 5;
  std::size_t max_epochs = 100;
  double dropout = 0.5;
};

/// The reference network halves the knowledge base width.
inline constexpr std::size_t reference_hidden_width(std::size_t kb_width) { return kb_width / 2; }

/// Trains a linear readout for the new task on the frozen KB's features as
/// seen through the stored mask of `source`. Returns the best validation
/// accuracy reached. The KB itself is never touched.
inline double train_transfer_readout(const KnowledgeBase& kb, const MaskStore& store,
                                     std::size_t source, const TaskDataset& data,
                                     const SimilarityConfig& cfg, Rng& rng) {
  const std::size_t width = kb.config().width;
  const std::size_t classes = data.class_count;
  const Tensor feat_train = forward_as_previous_task(kb, store, data.train.x, source);
  const Tensor feat_val = forward_as_previous_task(kb, store, data.valid.x, source);

  Parameter w(Tensor(Shape{width, classes}));
  Parameter b(Tensor(Shape{classes}, 0.0));
  init_glorot(w.t, width, classes, rng);

  EarlyStopper stop(cfg.patience);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (const auto& idx : epoch_batches(data.train.size(), cfg.batch, rng)) {
      Tape t;
      auto xb = t.input(gather_rows(feat_train, idx));
      auto logits = t.add_rowvec(t.matmul(xb, t.param(w)), t.param(b));
      t.backward(t.softmax_cross_entropy(logits, gather_labels(data.train.y, idx)));
      sgd_step({&w, &b}, cfg.lr);
    }
    Tape t;
    auto logits = t.add_rowvec(t.matmul(t.input_view(feat_val), t.param(w)), t.param(b));
    stop.update(accuracy(t.val(logits), data.valid.y), epoch);
    if (stop.should_stop(epoch)) break;
  }
  return stop.best;
}

/// Trains a fresh 2-layer network (hidden width = half the KB width) on the
/// task alone, no masks, and returns the best validation accuracy.
inline double train_reference(const TaskDataset& data, std::size_t kb_width,
                              const SimilarityConfig& cfg, Rng& rng) {
  const std::size_t d = data.train.x.cols();
  const std::size_t h = reference_hidden_width(kb_width);
  const std::size_t classes = data.class_count;

  Parameter w1(Tensor(Shape{d, h})), b1(Tensor(Shape{h}, 0.0));
  Parameter w2(Tensor(Shape{h, h})), b2(Tensor(Shape{h}, 0.0));
  Parameter hw(Tensor(Shape{h, classes})), hb(Tensor(Shape{classes}, 0.0));
  init_glorot(w1.t, d, h, rng);
  init_glorot(w2.t, h, h, rng);
  init_glorot(hw.t, h, classes, rng);
  const std::vector<Parameter*> params{&w1, &b1, &w2, &b2, &hw, &hb};

  auto forward = [&](Tape& t, const Tensor& x, bool training, Rng& drop) {
    auto a1 = t.relu(t.add_rowvec(t.matmul(t.input_view(x), t.param(w1)), t.param(b1)));
    auto d1 = t.dropout(a1, cfg.dropout, training, drop);
    auto a2 = t.relu(t.add_rowvec(t.matmul(d1, t.param(w2)), t.param(b2)));
    auto d2 = t.dropout(a2, cfg.dropout, training, drop);
    return t.add_rowvec(t.matmul(d2, t.param(hw)), t.param(hb));
  };

  EarlyStopper stop(cfg.patience);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (const auto& idx : epoch_batches(data.train.size(), cfg.batch, rng)) {
      Tensor xb = gather_rows(data.train.x, idx);
      Tape t;
      auto logits = forward(t, xb, true, rng);
      t.backward(t.softmax_cross_entropy(logits, gather_labels(data.train.y, idx)));
      sgd_step(params, cfg.lr);
    }
    Tape t;
    Rng unused(0);
    auto logits = forward(t, data.valid.x, false, unused);
    stop.update(accuracy(t.val(logits), data.valid.y), epoch);
    if (stop.should_stop(epoch)) break;
  }
  return stop.best;
}

/// One similarity bit per previous task: 1 when a readout over that task's
/// frozen masked features beats a from-scratch reference on the new task's
/// validation set, 0 otherwise (ties count as dissimilar). The RNG forks in a
/// fixed order: reference first, then transfers in the listed order.
inline std::vector<int> detect_similarity(const KnowledgeBase& kb, const MaskStore& store,
                                          const std::vector<std::size_t>& previous,
                                          const TaskDataset& data, const SimilarityConfig& cfg,
                                          Rng& rng) {
  if (previous.empty()) return {};
  if (data.valid.size() == 0) throw InputError("similarity detection needs a validation set");
  Rng ref_rng = rng.fork();
  const double ref_acc = train_reference(data, kb.config().width, cfg, ref_rng);
  std::vector<int> bits;
  bits.reserve(previous.size());
  for (std::size_t k : previous) {
    Rng tr_rng = rng.fork();
    const double acc = train_transfer_readout(kb, store, k, data, cfg, tr_rng);
    bits.push_back(acc > ref_acc ? 1 : 0);
  }
  return bits;
}

}  // namespace cat
