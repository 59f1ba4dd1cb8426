#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cat/dataset.hpp"
#include "cat/errors.hpp"
#include "cat/learner.hpp"

namespace cat {

constexpr char kCheckpointMagic[8] = {'C', 'A', 'T', 'C', 'K', 'P', 'T', '1'};

namespace detail {

inline void put_string(std::ostream& os, const std::string& s) {
  put_u64(os, s.size());
  os.write(s.data(), std::streamsize(s.size()));
}

inline std::string get_string(std::istream& is, const std::string& what) {
  const std::uint64_t n = get_u64(is, what);
  std::string s(n, '\0');
  is.read(s.data(), std::streamsize(n));
  if (!is) throw FormatError("checkpoint: truncated reading " + what);
  return s;
}

inline void put_double(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(os, bits);
}

inline double get_double(std::istream& is, const std::string& what) {
  const std::uint64_t bits = get_u64(is, what);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

inline void put_tensor(std::ostream& os, const Tensor& t) {
  put_u64(os, t.shape.size());
  for (std::size_t d : t.shape) put_u64(os, d);
  put_doubles(os, t.v);
}

inline Tensor get_tensor(std::istream& is, const std::string& what) {
  const std::uint64_t rank = get_u64(is, what);
  Shape shape(rank);
  for (auto& d : shape) d = get_u64(is, what);
  auto vals = get_doubles(is, what);
  if (vals.size() != shape_size(shape))
    throw FormatError("checkpoint: " + what + " values do not fill shape " + shape_str(shape));
  return Tensor(std::move(shape), std::move(vals));
}

/// Overwrites a live parameter, refusing shape changes so a corrupt file
/// cannot silently reconfigure the network.
inline void load_param(std::istream& is, Parameter& p, const std::string& what) {
  Tensor t = get_tensor(is, what);
  if (t.shape != p.t.shape)
    throw FormatError("checkpoint: " + what + " has shape " + shape_str(t.shape) +
                      ", expected " + shape_str(p.t.shape));
  p.t = std::move(t);
}

inline void put_network(std::ostream& os, const KnowledgeBase& kb) {
  const KbConfig& c = kb.config();
  put_u64(os, c.input_width);
  put_u64(os, c.width);
  put_double(os, c.s_max);
  put_double(os, c.dropout);
  put_tensor(os, kb.layer1_w().t);
  put_tensor(os, kb.layer1_b().t);
  put_tensor(os, kb.layer2_w().t);
  put_tensor(os, kb.layer2_b().t);
  const auto ids = kb.task_ids();
  put_u64(os, ids.size());
  for (std::size_t id : ids) {
    const auto& sl = kb.slot(id);
    put_u64(os, id);
    put_u64(os, sl.classes);
    put_tensor(os, sl.e1.t);
    put_tensor(os, sl.e2.t);
    put_tensor(os, sl.head_w.t);
    put_tensor(os, sl.head_b.t);
  }
}

inline KnowledgeBase get_network(std::istream& is) {
  KbConfig c;
  c.input_width = get_u64(is, "network input width");
  c.width = get_u64(is, "network width");
  c.s_max = get_double(is, "network s_max");
  c.dropout = get_double(is, "network dropout");
  Rng scratch(0);
  KnowledgeBase kb(c, scratch);
  load_param(is, kb.layer1_w(), "layer 1 weights");
  load_param(is, kb.layer1_b(), "layer 1 bias");
  load_param(is, kb.layer2_w(), "layer 2 weights");
  load_param(is, kb.layer2_b(), "layer 2 bias");
  const std::uint64_t n = get_u64(is, "task slot count");
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t id = get_u64(is, "task slot id");
    const std::uint64_t classes = get_u64(is, "task slot classes");
    kb.register_task(id, classes, scratch);
    auto& sl = kb.slot(id);
    load_param(is, sl.e1, "gate embedding 1");
    load_param(is, sl.e2, "gate embedding 2");
    load_param(is, sl.head_w, "head weights");
    load_param(is, sl.head_b, "head bias");
  }
  return kb;
}

}  // namespace detail

/// Serializes and restores the learner's full mutable state. Every value is
/// written bit-exact (doubles as raw IEEE-754 words), so a save/load cycle
/// followed by more training matches an uninterrupted run to the last bit.
struct CheckpointAccess {
  static void save(const ContinualLearner& lr, std::ostream& os) {
    using namespace detail;
    os.write(kCheckpointMagic, 8);

    const LearnerConfig& c = lr.cfg_;
    put_string(os, variant_name(c.variant));
    put_double(os, c.s_max);
    put_double(os, c.lr);
    put_u64(os, c.batch);
    put_u64(os, c.patience);
    put_u64(os, c.max_epochs);
    put_u64(os, c.kb_width);
    put_u64(os, c.heads);
    put_double(os, c.dropout);
    put_u64(os, c.seed);
    put_double(os, c.detector.lr);
    put_u64(os, c.detector.batch);
    put_u64(os, c.detector.patience);
    put_u64(os, c.detector.max_epochs);
    put_double(os, c.detector.dropout);

    put_u64(os, lr.rng_.state());

    put_u64(os, lr.kb_ ? 1 : 0);
    if (lr.kb_) put_network(os, *lr.kb_);
    put_u64(os, lr.nets_.size());
    for (const auto& net : lr.nets_) put_network(os, net);

    const auto mask_ids = lr.store_.task_ids();
    put_u64(os, mask_ids.size());
    for (std::size_t id : mask_ids) {
      const TaskMask& m = lr.store_.get(id);
      put_u64(os, id);
      put_doubles(os, m.m1);
      put_doubles(os, m.m2);
    }

    put_u64(os, lr.kta_.size());
    for (const auto& [id, blk] : lr.kta_) {
      put_u64(os, id);
      put_u64(os, blk.config().width);
      put_u64(os, blk.config().heads);
      put_double(os, blk.config().dropout);
      put_u64(os, blk.classes());
      put_tensor(os, blk.query_embedding().t);
      put_tensor(os, blk.proj_q().t);
      put_tensor(os, blk.proj_k().t);
      put_tensor(os, blk.proj_v().t);
      put_tensor(os, blk.norm_gain().t);
      put_tensor(os, blk.norm_bias().t);
      put_tensor(os, blk.head_w().t);
      put_tensor(os, blk.head_b().t);
    }

    put_u64(os, lr.att_.size());
    for (const auto& [id, means] : lr.att_) {
      put_u64(os, id);
      put_doubles(os, means);
    }

    put_u64(os, lr.tsv_.size());
    for (const auto& row : lr.tsv_) {
      put_u64(os, row.size());
      for (int b : row) put_u64(os, std::uint64_t(b));
    }

    put_u64(os, lr.past_.size());
    for (const auto& p : lr.past_) {
      put_u64(os, p.classes);
      put_u64(os, std::uint64_t(std::int64_t(p.group)));
      put_split(os, p.test, p.test.x.is_matrix() ? p.test.x.cols() : 0);
    }

    put_u64(os, lr.matrix_.rows.size());
    for (const auto& row : lr.matrix_.rows) put_doubles(os, row);

    if (!os) throw FormatError("checkpoint: write failed");
  }

  static ContinualLearner load(std::istream& is) {
    using namespace detail;
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0)
      throw FormatError("checkpoint: bad magic, not a checkpoint file");

    LearnerConfig c;
    const std::string vname = get_string(is, "variant");
    try {
      c.variant = variant_from_name(vname);
    } catch (const ConfigError&) {
      throw FormatError("checkpoint: unknown variant '" + vname + "'");
    }
    c.s_max = get_double(is, "s_max");
    c.lr = get_double(is, "lr");
    c.batch = get_u64(is, "batch");
    c.patience = get_u64(is, "patience");
    c.max_epochs = get_u64(is, "max_epochs");
    c.kb_width = get_u64(is, "kb_width");
    c.heads = get_u64(is, "heads");
    c.dropout = get_double(is, "dropout");
    c.seed = get_u64(is, "seed");
    c.detector.lr = get_double(is, "detector lr");
    c.detector.batch = get_u64(is, "detector batch");
    c.detector.patience = get_u64(is, "detector patience");
    c.detector.max_epochs = get_u64(is, "detector max_epochs");
    c.detector.dropout = get_double(is, "detector dropout");

    ContinualLearner lr(c);
    lr.rng_.set_state(get_u64(is, "rng state"));

    if (get_u64(is, "shared network flag")) lr.kb_.emplace(get_network(is));
    const std::uint64_t nets = get_u64(is, "network count");
    lr.nets_.reserve(nets);
    for (std::uint64_t i = 0; i < nets; ++i) lr.nets_.push_back(get_network(is));

    const std::uint64_t masks = get_u64(is, "mask count");
    for (std::uint64_t i = 0; i < masks; ++i) {
      const std::uint64_t id = get_u64(is, "mask task id");
      TaskMask m;
      m.m1 = get_doubles(is, "mask layer 1");
      m.m2 = get_doubles(is, "mask layer 2");
      if (m.m1.size() != c.kb_width || m.m2.size() != c.kb_width)
        throw FormatError("checkpoint: mask width mismatch for task " + std::to_string(id));
      lr.store_.put(id, std::move(m));
    }

    const std::uint64_t blocks = get_u64(is, "attention block count");
    for (std::uint64_t i = 0; i < blocks; ++i) {
      const std::uint64_t id = get_u64(is, "attention task id");
      KtaConfig kcfg;
      kcfg.width = get_u64(is, "attention width");
      kcfg.heads = get_u64(is, "attention heads");
      kcfg.dropout = get_double(is, "attention dropout");
      const std::uint64_t classes = get_u64(is, "attention classes");
      Rng scratch(0);
      KtaBlock blk(kcfg, classes, scratch);
      load_param(is, blk.query_embedding(), "attention query embedding");
      load_param(is, blk.proj_q(), "attention query projection");
      load_param(is, blk.proj_k(), "attention key projection");
      load_param(is, blk.proj_v(), "attention value projection");
      load_param(is, blk.norm_gain(), "attention norm gain");
      load_param(is, blk.norm_bias(), "attention norm bias");
      load_param(is, blk.head_w(), "attention head weights");
      load_param(is, blk.head_b(), "attention head bias");
      lr.kta_.emplace(id, std::move(blk));
    }

    const std::uint64_t summaries = get_u64(is, "attention summary count");
    for (std::uint64_t i = 0; i < summaries; ++i) {
      const std::uint64_t id = get_u64(is, "attention summary task id");
      lr.att_[id] = get_doubles(is, "attention summary");
    }

    const std::uint64_t tsv = get_u64(is, "similarity row count");
    lr.tsv_.resize(tsv);
    for (auto& row : lr.tsv_) {
      row.resize(get_u64(is, "similarity row length"));
      for (auto& b : row) b = int(get_u64(is, "similarity bit"));
    }

    const std::uint64_t past = get_u64(is, "finished task count");
    lr.past_.reserve(past);
    for (std::uint64_t i = 0; i < past; ++i) {
      ContinualLearner::PastTask p;
      p.classes = get_u64(is, "finished task classes");
      p.group = int(std::int64_t(get_u64(is, "finished task group")));
      p.test = get_split(is, "finished task test split");
      lr.past_.push_back(std::move(p));
    }

    const std::uint64_t rows = get_u64(is, "accuracy row count");
    lr.matrix_.rows.resize(rows);
    for (auto& row : lr.matrix_.rows) row = get_doubles(is, "accuracy row");

    if (lr.past_.size() != lr.matrix_.rows.size())
      throw FormatError("checkpoint: accuracy matrix does not match finished task count");
    const std::size_t want_tsv = lr.past_.empty() ? 0 : lr.past_.size() - 1;
    if (lr.tsv_.size() != want_tsv)
      throw FormatError("checkpoint: similarity rows do not match finished task count");
    return lr;
  }
};

inline void save_checkpoint(const ContinualLearner& learner, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path + ": cannot open for writing");
  CheckpointAccess::save(learner, os);
  if (!os) throw FormatError(path + ": write failed");
}

inline ContinualLearner load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(path + ": cannot open");
  return CheckpointAccess::load(is);
}

}  // namespace cat
