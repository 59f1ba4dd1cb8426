#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "cat/autodiff.hpp"
#include "cat/errors.hpp"
#include "cat/rng.hpp"
#include "cat/tensor.hpp"

namespace cat {

/// Gate scale schedule: ramps linearly from 1/s_max (first batch of an epoch)
/// to s_max (last batch), so gates start soft and end near-binary.
inline double anneal_s(std::size_t b, std::size_t total_batches, double s_max) {
  if (s_max <= 1.0) throw InputError("anneal_s: s_max must exceed 1");
  if (total_batches < 1 || b < 1 || b > total_batches)
    throw InputError("anneal_s: batch index " + std::to_string(b) + " outside [1," +
                     std::to_string(total_batches) + "]");
  if (total_batches == 1) return 1.0 / s_max;
  return 1.0 / s_max +
         (s_max - 1.0 / s_max) * double(b - 1) / double(total_batches - 1);
}

struct KbConfig {
  std::size_t input_width = 0;
  std::size_t width = 2000;
  double s_max = 140.0;
  double dropout = 0.5;
};

inline void init_glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  for (auto& x : t.v) x = rng.uniform(-limit, limit);
}

/// Shared 2-layer fully connected feature extractor plus, per registered
/// task, a pair of gate embeddings (one per layer) and a linear
/// classification head. Weights are stored input-major: y = x * W + b.
class KnowledgeBase {
 public:
  struct TaskSlot {
    Parameter e1, e2;    // gate embeddings, one entry per hidden unit
    Parameter head_w, head_b;
    std::size_t classes = 0;
  };

  struct MaskedForward {
    Tape::Var h1;       // layer-1 activations after masking
    Tape::Var h2;       // layer-2 activations after masking (the KB features)
    Tape::Var h2_drop;  // h2 after dropout; identical node to h2 in eval mode
  };

  KnowledgeBase(KbConfig cfg, Rng& rng)
      : cfg_(cfg),
        w1_(Tensor(Shape{cfg.input_width, cfg.width})),
        b1_(Tensor(Shape{cfg.width}, 0.0)),
        w2_(Tensor(Shape{cfg.width, cfg.width})),
        b2_(Tensor(Shape{cfg.width}, 0.0)) {
    if (cfg.input_width == 0 || cfg.width == 0)
      throw ConfigError("knowledge base needs nonzero input and layer widths");
    init_glorot(w1_.t, cfg.input_width, cfg.width, rng);
    init_glorot(w2_.t, cfg.width, cfg.width, rng);
  }

  const KbConfig& config() const { return cfg_; }

  void register_task(std::size_t task, std::size_t classes, Rng& rng) {
    if (tasks_.count(task))
      throw StateError("task " + std::to_string(task) + " already registered");
    if (classes < 2) throw InputError("a task needs at least 2 classes");
    TaskSlot slot{Parameter(Tensor(Shape{cfg_.width})), Parameter(Tensor(Shape{cfg_.width})),
                  Parameter(Tensor(Shape{cfg_.width, classes})),
                  Parameter(Tensor(Shape{classes}, 0.0)), classes};
    for (auto& x : slot.e1.t.v) x = rng.uniform(-1.0, 1.0);
    for (auto& x : slot.e2.t.v) x = rng.uniform(-1.0, 1.0);
    init_glorot(slot.head_w.t, cfg_.width, classes, rng);
    tasks_.emplace(task, std::move(slot));
  }

  bool has_task(std::size_t task) const { return tasks_.count(task) != 0; }
  std::size_t task_count() const { return tasks_.size(); }

  TaskSlot& slot(std::size_t task) {
    auto it = tasks_.find(task);
    if (it == tasks_.end()) throw LookupError("unknown task " + std::to_string(task));
    return it->second;
  }
  const TaskSlot& slot(std::size_t task) const {
    auto it = tasks_.find(task);
    if (it == tasks_.end()) throw LookupError("unknown task " + std::to_string(task));
    return it->second;
  }
  std::size_t class_count(std::size_t task) const { return slot(task).classes; }

  std::vector<std::size_t> task_ids() const {
    std::vector<std::size_t> ids;
    ids.reserve(tasks_.size());
    for (const auto& [id, s] : tasks_) ids.push_back(id);
    return ids;
  }

  Parameter& layer1_w() { return w1_; }
  Parameter& layer1_b() { return b1_; }
  Parameter& layer2_w() { return w2_; }
  Parameter& layer2_b() { return b2_; }
  const Parameter& layer1_w() const { return w1_; }
  const Parameter& layer1_b() const { return b1_; }
  const Parameter& layer2_w() const { return w2_; }
  const Parameter& layer2_b() const { return b2_; }

  std::vector<Parameter*> shared_params() { return {&w1_, &b1_, &w2_, &b2_}; }

  std::vector<Parameter*> task_params(std::size_t task) {
    auto& s = slot(task);
    return {&s.e1, &s.e2, &s.head_w, &s.head_b};
  }

  /// Just the classifier head, for training styles that never touch gates.
  std::vector<Parameter*> head_params(std::size_t task) {
    auto& s = slot(task);
    return {&s.head_w, &s.head_b};
  }

  /// Soft gate vector for one layer: sigmoid(s * e). Differentiable in e.
  Tape::Var mask_for(Tape& tape, std::size_t task, int layer, double s) {
    auto& sl = slot(task);
    if (layer != 1 && layer != 2) throw InputError("layer must be 1 or 2");
    return tape.sigmoid(tape.scale(tape.param(layer == 1 ? sl.e1 : sl.e2), s));
  }

  /// Training-graph forward with the task's trainable soft gates.
  MaskedForward forward_masked(Tape& tape, Tape::Var x, std::size_t task, double s,
                               bool training, Rng& rng) {
    auto m1 = mask_for(tape, task, 1, s);
    auto m2 = mask_for(tape, task, 2, s);
    return forward_gated(tape, x, m1, m2, training, rng);
  }

  /// Forward gated by fixed vectors (stored binary masks of an earlier task).
  MaskedForward forward_fixed(Tape& tape, Tape::Var x, const std::vector<double>& m1,
                              const std::vector<double>& m2, bool training, Rng& rng) {
    if (m1.size() != cfg_.width || m2.size() != cfg_.width)
      throw ShapeError("fixed mask width mismatch");
    auto v1 = tape.input(Tensor(Shape{cfg_.width}, m1));
    auto v2 = tape.input(Tensor(Shape{cfg_.width}, m2));
    return forward_gated(tape, x, v1, v2, training, rng);
  }

  Tape::Var classify_mask_head(Tape& tape, Tape::Var h, std::size_t task) {
    auto& sl = slot(task);
    return tape.add_rowvec(tape.matmul(h, tape.param(sl.head_w)), tape.param(sl.head_b));
  }

  /// Evaluation-mode masked forward, no tape, no dropout. With all-ones masks
  /// this is the plain 2-layer forward.
  Tensor forward_with_fixed_masks(const Tensor& x, const std::vector<double>& m1,
                                  const std::vector<double>& m2) const {
    if (!x.is_matrix() || x.cols() != cfg_.input_width)
      throw ShapeError("input batch " + shape_str(x.shape) + " does not match input width " +
                       std::to_string(cfg_.input_width));
    if (m1.size() != cfg_.width || m2.size() != cfg_.width)
      throw ShapeError("fixed mask width mismatch");
    const std::size_t n = x.rows(), w = cfg_.width;
    Tensor h1(Shape{n, w}, 0.0);
    detail::mm_acc(x.v.data(), w1_.t.v.data(), h1.v.data(), n, cfg_.input_width, w);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        double a = h1.v[i * w + j] + b1_.t.v[j];
        h1.v[i * w + j] = (a > 0.0 ? a : 0.0) * m1[j];
      }
    Tensor h2(Shape{n, w}, 0.0);
    detail::mm_acc(h1.v.data(), w2_.t.v.data(), h2.v.data(), n, w, w);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        double a = h2.v[i * w + j] + b2_.t.v[j];
        h2.v[i * w + j] = (a > 0.0 ? a : 0.0) * m2[j];
      }
    return h2;
  }

  Tensor forward_plain(const Tensor& x) const {
    const std::vector<double> ones(cfg_.width, 1.0);
    return forward_with_fixed_masks(x, ones, ones);
  }

  /// Evaluation-mode head logits, no tape.
  Tensor head_logits(const Tensor& h, std::size_t task) const {
    const auto& sl = slot(task);
    if (!h.is_matrix() || h.cols() != cfg_.width)
      throw ShapeError("features " + shape_str(h.shape) + " do not match layer width");
    const std::size_t n = h.rows(), c = sl.classes;
    Tensor logits(Shape{n, c}, 0.0);
    detail::mm_acc(h.v.data(), sl.head_w.t.v.data(), logits.v.data(), n, cfg_.width, c);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) logits.v[i * c + j] += sl.head_b.t.v[j];
    return logits;
  }

 private:
  MaskedForward forward_gated(Tape& tape, Tape::Var x, Tape::Var m1, Tape::Var m2,
                              bool training, Rng& rng) {
    auto a1 = tape.relu(tape.add_rowvec(tape.matmul(x, tape.param(w1_)), tape.param(b1_)));
    auto h1 = tape.mul_rowvec(a1, m1);
    auto d1 = tape.dropout(h1, cfg_.dropout, training, rng);
    auto a2 = tape.relu(tape.add_rowvec(tape.matmul(d1, tape.param(w2_)), tape.param(b2_)));
    auto h2 = tape.mul_rowvec(a2, m2);
    auto d2 = tape.dropout(h2, cfg_.dropout, training, rng);
    return {h1, h2, d2};
  }

  KbConfig cfg_;
  Parameter w1_, b1_, w2_, b2_;
  std::map<std::size_t, TaskSlot> tasks_;
};

}  // namespace cat
