#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cat/autodiff.hpp"
#include "cat/dataset.hpp"
#include "cat/errors.hpp"
#include "cat/knowledge_base.hpp"
#include "cat/kta.hpp"
#include "cat/mask_store.hpp"
#include "cat/rng.hpp"
#include "cat/similarity.hpp"
#include "cat/training.hpp"

namespace cat {

enum class Variant {
  CAT,                    // full method: detected similarity, blocking, attention
  CAT_minus_KTA,          // detected similarity drives blocking, no attention branch
  CAT_all_sim,            // every predecessor forced similar: no blocking, full attention
  CAT_all_sim_minus_KTA,  // forced similar and no attention: gates only, nothing protected
  CAT_all_dis,            // every predecessor forced dissimilar: blocking only
  NCL,                    // one shared network, per-task heads, no protection at all
  ONE,                    // an independent network per task
};

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::CAT: return "CAT";
    case Variant::CAT_minus_KTA: return "CAT-KTA";
    case Variant::CAT_all_sim: return "CAT-all-sim";
    case Variant::CAT_all_sim_minus_KTA: return "CAT-all-sim-KTA";
    case Variant::CAT_all_dis: return "CAT-all-dis";
    case Variant::NCL: return "NCL";
    case Variant::ONE: return "ONE";
  }
  throw ConfigError("unknown variant");
}

inline Variant variant_from_name(const std::string& name) {
  for (Variant v : {Variant::CAT, Variant::CAT_minus_KTA, Variant::CAT_all_sim,
                    Variant::CAT_all_sim_minus_KTA, Variant::CAT_all_dis, Variant::NCL,
                    Variant::ONE})
    if (name == variant_name(v)) return v;
  throw ConfigError("unknown variant '" + name + "'");
}

/// The ablation grid: the four stripped-down variants in report column order,
/// then the full method.
inline std::vector<Variant> ablation_variants() {
  return {Variant::CAT_all_sim_minus_KTA, Variant::CAT_all_sim, Variant::CAT_all_dis,
          Variant::CAT_minus_KTA, Variant::CAT};
}

inline bool variant_uses_attention(Variant v) {
  return v == Variant::CAT || v == Variant::CAT_all_sim;
}
inline bool variant_uses_masks(Variant v) {
  return v != Variant::NCL && v != Variant::ONE;
}
inline bool variant_uses_detector(Variant v) {
  return v == Variant::CAT || v == Variant::CAT_minus_KTA;
}

struct LearnerConfig {
  Variant variant = Variant::CAT;
  double s_max = 140.0;
  double lr = 0.05;
  std::size_t batch = 64;
  std::size_t patience = 5;
  std::size_t max_epochs = 200;
  std::size_t kb_width = 2000;
  std::size_t heads = 5;
  double dropout = 0.5;
  std::uint64_t seed = 0;
  SimilarityConfig detector;  // budget for the transfer-vs-reference race
};

/// One sentence per variant describing the training rule it applies.
inline std::string variant_behavior(const LearnerConfig& cfg) {
  switch (cfg.variant) {
    case Variant::CAT:
      return "detected similarity; dissimilar units blocked; attention head over "
             "similar predecessors trained jointly with the gated head";
    case Variant::CAT_minus_KTA:
      return "detected similarity; dissimilar units blocked; gated head only";
    case Variant::CAT_all_sim:
      return "all predecessors treated as similar; no blocking; attention head "
             "trained jointly with the gated head";
    case Variant::CAT_all_sim_minus_KTA:
      return "all predecessors treated as similar; no blocking; gated head only";
    case Variant::CAT_all_dis:
      return "all predecessors treated as dissimilar; all used units blocked; "
             "gated head only";
    case Variant::NCL:
      return "shared network trained greedily with per-task heads; no gates, no "
             "blocking, no attention";
    case Variant::ONE:
      return "independent full-width network per task";
  }
  throw ConfigError("unknown variant");
}

/// acc.rows[i][j - i] holds task i's test accuracy measured right after task j
/// finished training, so each row ends with the accuracy under final weights.
struct AccuracyMatrix {
  std::vector<std::vector<double>> rows;

  std::size_t tasks() const { return rows.size(); }

  double at(std::size_t i, std::size_t j) const {
    if (i >= rows.size() || j < i || j - i >= rows[i].size())
      throw LookupError("accuracy matrix has no entry (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");
    return rows[i][j - i];
  }

  double when_learned(std::size_t i) const { return at(i, i); }
  double after_all(std::size_t i) const { return at(i, tasks() - 1); }

  bool operator==(const AccuracyMatrix& o) const { return rows == o.rows; }
};

struct TransferMetrics {
  std::optional<double> forward_avg;   // mean accuracy when first learned
  std::optional<double> backward_avg;  // mean accuracy under final weights
};

/// Averages over the given task ids; empty id set yields empty optionals
/// rather than zeros so "no similar tasks" is distinguishable from "similar
/// tasks scored zero".
inline TransferMetrics transfer_metrics(const AccuracyMatrix& m,
                                        const std::vector<std::size_t>& task_ids) {
  TransferMetrics out;
  if (task_ids.empty()) return out;
  double fwd = 0.0, bwd = 0.0;
  for (std::size_t i : task_ids) {
    fwd += m.when_learned(i);
    bwd += m.after_all(i);
  }
  out.forward_avg = fwd / double(task_ids.size());
  out.backward_avg = bwd / double(task_ids.size());
  return out;
}

struct CheckpointAccess;

/// Drives the task sequence: similarity detection, protected training,
/// mask bookkeeping, and the growing accuracy matrix.
class ContinualLearner {
 public:
  explicit ContinualLearner(LearnerConfig cfg)
      : cfg_(cfg), store_(cfg.kb_width), rng_(cfg.seed) {
    if (cfg.kb_width == 0) throw ConfigError("learner needs a nonzero network width");
    if (uses_attention(cfg.variant) && cfg.kb_width % cfg.heads != 0)
      throw ConfigError("network width " + std::to_string(cfg.kb_width) +
                        " is not divisible into " + std::to_string(cfg.heads) + " heads");
    if (cfg.batch == 0) throw ConfigError("batch size must be positive");
  }

  const LearnerConfig& config() const { return cfg_; }
  std::size_t tasks_learned() const { return past_.size(); }
  const AccuracyMatrix& matrix() const { return matrix_; }
  const MaskStore& masks() const { return store_; }
  std::size_t kta_block_count() const { return kta_.size(); }
  bool has_kta(std::size_t task) const { return kta_.count(task) != 0; }

  const KtaBlock& kta_block(std::size_t task) const {
    auto it = kta_.find(task);
    if (it == kta_.end())
      throw LookupError("task " + std::to_string(task) + " has no attention block");
    return it->second;
  }

  /// Rows for tasks 1..T-1; the first task never has one.
  const std::vector<std::vector<int>>& tsv_rows() const { return tsv_; }

  std::vector<int> tsv_row(std::size_t task) const {
    if (task != 0 && task - 1 >= tsv_.size())
      throw LookupError("no similarity row for task " + std::to_string(task));
    return task == 0 ? std::vector<int>{} : tsv_[task - 1];
  }

  std::vector<std::size_t> similar_of(std::size_t task) const {
    std::vector<std::size_t> out;
    const auto row = tsv_row(task);
    for (std::size_t k = 0; k < row.size(); ++k)
      if (row[k]) out.push_back(k);
    return out;
  }

  /// Mean attention weight per similar predecessor, measured on the task's
  /// validation set right after training; keys are tasks that trained with
  /// the attention head. Column k aligns with similar_of(task)[k].
  const std::map<std::size_t, std::vector<double>>& attention_summaries() const { return att_; }

  /// Every task id whose row marked at least one predecessor similar.
  std::vector<std::size_t> tasks_with_transfer() const {
    std::vector<std::size_t> out;
    for (std::size_t t = 1; t < past_.size(); ++t)
      if (!similar_of(t).empty()) out.push_back(t);
    return out;
  }

  const KnowledgeBase& kb() const {
    if (!kb_) throw StateError("no task learned yet");
    return *kb_;
  }

  void learn_task(const TaskDataset& data) {
    const std::size_t t = past_.size();
    validate(data, t);

    // fork order is fixed so every variant sees identical training streams
    if (cfg_.variant == Variant::ONE || t == 0) {
      Rng init = rng_.fork();
      KbConfig kcfg{data.train.x.cols(), cfg_.kb_width, cfg_.s_max, cfg_.dropout};
      if (cfg_.variant == Variant::ONE)
        nets_.emplace_back(kcfg, init);
      else
        kb_.emplace(kcfg, init);
    }
    KnowledgeBase& net = cfg_.variant == Variant::ONE ? nets_.back() : *kb_;

    Rng reg_rng = rng_.fork();
    net.register_task(t, data.class_count, reg_rng);

    Rng det_rng = rng_.fork();
    std::vector<int> bits = similarity_bits(net, data, t, det_rng);
    if (t > 0) tsv_.push_back(bits);

    std::vector<std::size_t> similar, dissimilar;
    for (std::size_t k = 0; k < bits.size(); ++k) (bits[k] ? similar : dissimilar).push_back(k);

    Rng kta_rng = rng_.fork();
    KtaBlock* kta = nullptr;
    if (uses_attention(cfg_.variant) && !similar.empty()) {
      KtaConfig kcfg{cfg_.kb_width, cfg_.heads, cfg_.dropout};
      kta = &kta_.emplace(t, KtaBlock(kcfg, data.class_count, kta_rng)).first->second;
    }

    const bool masked = uses_masks(cfg_.variant);
    bool hooks_installed = false;
    if (masked && !dissimilar.empty()) {
      install_blocking_hooks(net, store_.accumulate(dissimilar));
      hooks_installed = true;
    }

    Rng train_rng = rng_.fork();
    // the attention loss only sees similar predecessors in attention variants
    const std::vector<std::size_t> loss_similar = kta ? similar : std::vector<std::size_t>{};
    train(net, kta, data, t, loss_similar, train_rng);
    if (kta) att_[t] = attention_means(net, kta, data, t, loss_similar);

    if (masked) store_.save(t, net);
    if (hooks_installed) remove_blocking_hooks(net);

    past_.push_back(PastTask{data.test, data.class_count, data.group});

    matrix_.rows.emplace_back();
    for (std::size_t i = 0; i <= t; ++i)
      matrix_.rows[i].push_back(accuracy(predict(i, past_[i].test.x), past_[i].test.y));
  }

  AccuracyMatrix learn_sequence(const std::vector<TaskDataset>& tasks) {
    if (tasks.empty()) throw InputError("task sequence is empty");
    for (const auto& task : tasks) learn_task(task);
    return matrix_;
  }

  /// Test-time logits for a learned task under the current weights. Routing
  /// follows the stored similarity row: tasks that trained with the attention
  /// head keep using it (recomputed, so later backward transfer shows up),
  /// everything else reads its gated snapshot of the shared network.
  Tensor predict(std::size_t task, const Tensor& x) {
    if (task >= past_.size()) throw LookupError("task " + std::to_string(task) + " not learned");
    if (cfg_.variant == Variant::ONE) {
      const KnowledgeBase& net = nets_[task];
      return net.head_logits(net.forward_plain(x), task);
    }
    if (cfg_.variant == Variant::NCL)
      return kb_->head_logits(kb_->forward_plain(x), task);

    const auto similar = similar_of(task);
    if (has_kta(task) && !similar.empty()) {
      Tape tape;
      Rng unused(0);
      auto xv = tape.input_view(x);
      std::vector<Tape::Var> branches;
      branches.reserve(similar.size());
      for (std::size_t k : similar) {
        const auto& m = store_.get(k);
        branches.push_back(kb_->forward_fixed(tape, xv, m.m1, m.m2, false, unused).h2_drop);
      }
      auto& block = kta_.at(task);
      auto att = block.attend(tape, branches, false, unused);
      return tape.val(block.classify(tape, att.h));
    }
    const auto& m = store_.get(task);
    return kb_->head_logits(kb_->forward_with_fixed_masks(x, m.m1, m.m2), task);
  }

 private:
  struct PastTask {
    Split test;
    std::size_t classes = 0;
    int group = -1;
  };

  static bool uses_attention(Variant v) { return variant_uses_attention(v); }
  static bool uses_masks(Variant v) { return variant_uses_masks(v); }

  void validate(const TaskDataset& data, std::size_t t) const {
    if (data.task_id != t)
      throw InputError("expected task " + std::to_string(t) + ", got dataset for task " +
                       std::to_string(data.task_id));
    if (data.train.size() == 0 || data.valid.size() == 0 || data.test.size() == 0)
      throw InputError("task " + std::to_string(t) + " needs train, validation and test rows");
    for (const Split* s : {&data.train, &data.valid, &data.test})
      if (!s->x.is_matrix() || s->x.rows() != s->y.size())
        throw InputError("task " + std::to_string(t) + " has inconsistent rows and labels");
    const std::size_t width = data.train.x.cols();
    if (data.valid.x.cols() != width || data.test.x.cols() != width)
      throw InputError("task " + std::to_string(t) + " splits disagree on input width");
    if (t > 0 && cfg_.variant != Variant::ONE && width != kb_->config().input_width)
      throw InputError("task " + std::to_string(t) + " input width " + std::to_string(width) +
                       " does not match the network's " +
                       std::to_string(kb_->config().input_width));
  }

  std::vector<int> similarity_bits(KnowledgeBase& net, const TaskDataset& data, std::size_t t,
                                   Rng& det_rng) {
    if (t == 0) return {};
    switch (cfg_.variant) {
      case Variant::CAT:
      case Variant::CAT_minus_KTA: {
        std::vector<std::size_t> previous(t);
        for (std::size_t k = 0; k < t; ++k) previous[k] = k;
        return detect_similarity(net, store_, previous, data, cfg_.detector, det_rng);
      }
      case Variant::CAT_all_sim:
      case Variant::CAT_all_sim_minus_KTA:
        return std::vector<int>(t, 1);
      case Variant::CAT_all_dis:
      case Variant::NCL:
      case Variant::ONE:
        return std::vector<int>(t, 0);
    }
    throw ConfigError("unknown variant");
  }

  void train(KnowledgeBase& net, KtaBlock* kta, const TaskDataset& data, std::size_t t,
             const std::vector<std::size_t>& similar, Rng& rng) {
    const bool masked = uses_masks(cfg_.variant);
    std::vector<Parameter*> params = net.shared_params();
    if (masked)
      for (auto* p : net.task_params(t)) params.push_back(p);
    else
      for (auto* p : net.head_params(t)) params.push_back(p);
    if (kta)
      for (auto* p : kta->params()) params.push_back(p);

    const std::vector<double> open(cfg_.kb_width, 1.0);
    EarlyStopper stop(cfg_.patience);
    std::vector<Tensor> best;
    auto snapshot = [&] {
      best.clear();
      best.reserve(params.size());
      for (auto* p : params) best.push_back(p->t);
    };
    snapshot();

    for (std::size_t epoch = 1; epoch <= cfg_.max_epochs; ++epoch) {
      auto batches = epoch_batches(data.train.size(), cfg_.batch, rng);
      const std::size_t total = batches.size();
      for (std::size_t b = 0; b < total; ++b) {
        const double s = anneal_s(b + 1, total, cfg_.s_max);
        Tape tape;
        auto xv = tape.input(gather_rows(data.train.x, batches[b]));
        const auto labels = gather_labels(data.train.y, batches[b]);
        Tape::Var loss;
        if (masked) {
          loss = joint_forward(tape, net, kta, store_, similar, xv, labels, t, s, true, rng).loss;
        } else {
          auto fwd = net.forward_fixed(tape, xv, open, open, true, rng);
          loss = tape.softmax_cross_entropy(net.classify_mask_head(tape, fwd.h2_drop, t), labels);
        }
        tape.backward(loss);
        sgd_step(params, cfg_.lr);
      }

      double val_acc;
      if (masked) {
        Tape tape;
        Rng unused(0);
        auto jf = joint_forward(tape, net, kta, store_, similar, tape.input_view(data.valid.x),
                                data.valid.y, t, cfg_.s_max, false, unused);
        val_acc = accuracy(tape.val(kta ? jf.kta_logits : jf.mask_logits), data.valid.y);
      } else {
        val_acc = accuracy(net.head_logits(net.forward_plain(data.valid.x), t), data.valid.y);
      }
      if (stop.update(val_acc, epoch)) snapshot();
      if (stop.should_stop(epoch)) break;
    }

    for (std::size_t i = 0; i < params.size(); ++i) params[i]->t = best[i];
  }

  /// Per-predecessor attention weight averaged over heads and validation rows.
  std::vector<double> attention_means(KnowledgeBase& net, KtaBlock* kta, const TaskDataset& data,
                                      std::size_t t, const std::vector<std::size_t>& similar) {
    Tape tape;
    Rng unused(0);
    auto jf = joint_forward(tape, net, kta, store_, similar, tape.input_view(data.valid.x),
                            data.valid.y, t, cfg_.s_max, false, unused);
    std::vector<double> mean(similar.size(), 0.0);
    double rows = 0.0;
    for (const auto& wv : jf.attention_weights) {
      const Tensor w = tape.val(wv);
      for (std::size_t r = 0; r < w.rows(); ++r)
        for (std::size_t c = 0; c < w.cols(); ++c) mean[c] += w.v[r * w.cols() + c];
      rows += double(w.rows());
    }
    for (auto& m : mean) m /= rows;
    return mean;
  }

  friend struct CheckpointAccess;

  LearnerConfig cfg_;
  std::optional<KnowledgeBase> kb_;  // shared-network variants
  std::vector<KnowledgeBase> nets_;  // ONE keeps a network per task
  MaskStore store_;
  std::map<std::size_t, KtaBlock> kta_;
  std::map<std::size_t, std::vector<double>> att_;
  std::vector<std::vector<int>> tsv_;
  std::vector<PastTask> past_;
  AccuracyMatrix matrix_;
  Rng rng_;
};

}  // namespace cat
