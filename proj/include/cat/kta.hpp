#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cat/autodiff.hpp"
#include "cat/errors.hpp"
#include "cat/knowledge_base.hpp"
#include "cat/mask_store.hpp"
#include "cat/rng.hpp"
#include "cat/tensor.hpp"

namespace cat {

struct KtaConfig {
  std::size_t width = 2000;
  std::size_t heads = 5;
  double dropout = 0.5;
};

/// Transfer attention for one task: a learned query embedding attends over
/// the masked KB features of the task's similar predecessors, and a separate
/// classification head reads the attended mixture.
class KtaBlock {
 public:
  KtaBlock(KtaConfig cfg, std::size_t classes, Rng& rng)
      : cfg_(cfg),
        classes_(classes),
        e_(Tensor(Shape{1, cfg.width})),
        theta_q_(Tensor(Shape{cfg.width, cfg.width})),
        theta_k_(Tensor(Shape{cfg.width, cfg.width})),
        theta_v_(Tensor(Shape{cfg.width, cfg.width})),
        ln_gain_(Tensor(Shape{cfg.width}, 1.0)),
        ln_bias_(Tensor(Shape{cfg.width}, 0.0)),
        head_w_(Tensor(Shape{cfg.width, classes})),
        head_b_(Tensor(Shape{classes}, 0.0)) {
    if (cfg.heads == 0 || cfg.width % cfg.heads != 0)
      throw ConfigError("attention width " + std::to_string(cfg.width) +
                        " must divide evenly into " + std::to_string(cfg.heads) + " heads");
    if (classes < 2) throw InputError("a task needs at least 2 classes");
    for (auto& x : e_.t.v) x = rng.uniform(-1.0, 1.0);
    init_glorot(theta_q_.t, cfg.width, cfg.width, rng);
    init_glorot(theta_k_.t, cfg.width, cfg.width, rng);
    init_glorot(theta_v_.t, cfg.width, cfg.width, rng);
    init_glorot(head_w_.t, cfg.width, classes, rng);
  }

  const KtaConfig& config() const { return cfg_; }
  std::size_t classes() const { return classes_; }

  struct Attended {
    Tape::Var h;                      // after dropout and layer norm
    Tape::Var pre_norm;               // weighted head-concatenated mixture
    std::vector<Tape::Var> weights;   // per head, [batch x n_similar]
  };

  /// Scaled dot-product attention over the similar tasks' features. The
  /// scores are scaled by 1/sqrt(n) where n is the number of similar tasks.
  Attended attend(Tape& tape, const std::vector<Tape::Var>& similar_outputs, bool training,
                  Rng& rng) {
    const std::size_t n = similar_outputs.size();
    if (n == 0) throw InputError("attention needs at least one similar task");
    const std::size_t w = cfg_.width, hw = w / cfg_.heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(double(n));

    auto q = tape.matmul(tape.param(e_), tape.param(theta_q_));
    std::vector<Tape::Var> keys(n), values(n);
    for (std::size_t i = 0; i < n; ++i) {
      keys[i] = tape.matmul(similar_outputs[i], tape.param(theta_k_));
      values[i] = tape.matmul(similar_outputs[i], tape.param(theta_v_));
    }

    Attended out;
    std::vector<Tape::Var> head_mix(cfg_.heads);
    for (std::size_t h = 0; h < cfg_.heads; ++h) {
      const std::size_t c0 = h * hw, c1 = (h + 1) * hw;
      auto qh = tape.transpose(tape.slice_cols(q, c0, c1));  // [hw x 1]
      std::vector<Tape::Var> scores(n);
      for (std::size_t i = 0; i < n; ++i)
        scores[i] = tape.matmul(tape.slice_cols(keys[i], c0, c1), qh);  // [batch x 1]
      auto a = tape.softmax_rows(tape.scale(tape.concat_cols(scores), inv_sqrt_dk));
      out.weights.push_back(a);
      Tape::Var mix;
      for (std::size_t i = 0; i < n; ++i) {
        auto term = tape.mul_colvec(tape.slice_cols(values[i], c0, c1),
                                    tape.slice_cols(a, i, i + 1));
        mix = i == 0 ? term : tape.add(mix, term);
      }
      head_mix[h] = mix;
    }
    out.pre_norm = tape.concat_cols(head_mix);
    auto dropped = tape.dropout(out.pre_norm, cfg_.dropout, training, rng);
    out.h = tape.layer_norm(dropped, tape.param(ln_gain_), tape.param(ln_bias_));
    return out;
  }

  Tape::Var classify(Tape& tape, Tape::Var h) {
    return tape.add_rowvec(tape.matmul(h, tape.param(head_w_)), tape.param(head_b_));
  }

  std::vector<Parameter*> params() {
    return {&e_, &theta_q_, &theta_k_, &theta_v_, &ln_gain_, &ln_bias_, &head_w_, &head_b_};
  }

  Parameter& query_embedding() { return e_; }
  Parameter& proj_q() { return theta_q_; }
  Parameter& proj_k() { return theta_k_; }
  Parameter& proj_v() { return theta_v_; }
  Parameter& norm_gain() { return ln_gain_; }
  Parameter& norm_bias() { return ln_bias_; }
  Parameter& head_w() { return head_w_; }
  Parameter& head_b() { return head_b_; }
  const Parameter& query_embedding() const { return e_; }
  const Parameter& proj_q() const { return theta_q_; }
  const Parameter& proj_k() const { return theta_k_; }
  const Parameter& proj_v() const { return theta_v_; }
  const Parameter& norm_gain() const { return ln_gain_; }
  const Parameter& norm_bias() const { return ln_bias_; }
  const Parameter& head_w() const { return head_w_; }
  const Parameter& head_b() const { return head_b_; }

 private:
  KtaConfig cfg_;
  std::size_t classes_;
  Parameter e_, theta_q_, theta_k_, theta_v_, ln_gain_, ln_bias_, head_w_, head_b_;
};

struct JointForward {
  Tape::Var loss;
  Tape::Var mask_logits;
  Tape::Var kta_logits;  // invalid when the task has no similar predecessors
  std::vector<Tape::Var> attention_weights;
};

/// One training-graph forward for task `task`: the gated branch feeding the
/// per-task head, plus, when similar predecessors exist, the transfer branch
/// feeding the attention head. The loss is the sum of both cross entropies.
inline JointForward joint_forward(Tape& tape, KnowledgeBase& kb, KtaBlock* kta,
                                  const MaskStore& store,
                                  const std::vector<std::size_t>& similar, Tape::Var x,
                                  const std::vector<std::size_t>& labels, std::size_t task,
                                  double s, bool training, Rng& rng) {
  JointForward out;
  auto fwd = kb.forward_masked(tape, x, task, s, training, rng);
  out.mask_logits = kb.classify_mask_head(tape, fwd.h2_drop, task);
  out.loss = tape.softmax_cross_entropy(out.mask_logits, labels);
  if (!similar.empty()) {
    if (!kta) throw StateError("task has similar predecessors but no attention block");
    std::vector<Tape::Var> prev(similar.size());
    for (std::size_t i = 0; i < similar.size(); ++i) {
      const TaskMask& m = store.get(similar[i]);
      prev[i] = kb.forward_fixed(tape, x, m.m1, m.m2, training, rng).h2_drop;
    }
    auto att = kta->attend(tape, prev, training, rng);
    out.attention_weights = att.weights;
    out.kta_logits = kta->classify(tape, att.h);
    out.loss = tape.add(out.loss, tape.softmax_cross_entropy(out.kta_logits, labels));
  }
  return out;
}

}  // namespace cat
