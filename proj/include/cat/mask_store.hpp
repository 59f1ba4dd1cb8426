#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "cat/errors.hpp"
#include "cat/knowledge_base.hpp"

namespace cat {

/// Final gate pattern of a completed task, binarized at save time.
struct TaskMask {
  std::vector<double> m1, m2;  // entries exactly 0.0 or 1.0
};

/// Union (elementwise max) of a set of task masks.
struct AccumulatedMask {
  std::vector<double> m1, m2;
};

inline AccumulatedMask accumulate_masks(const std::vector<const TaskMask*>& masks,
                                        std::size_t width) {
  AccumulatedMask acc{std::vector<double>(width, 0.0), std::vector<double>(width, 0.0)};
  for (const TaskMask* m : masks) {
    if (m->m1.size() != width || m->m2.size() != width)
      throw ShapeError("mask width " + std::to_string(m->m1.size()) + " does not match " +
                       std::to_string(width));
    for (std::size_t i = 0; i < width; ++i) {
      if (m->m1[i] > acc.m1[i]) acc.m1[i] = m->m1[i];
      if (m->m2[i] > acc.m2[i]) acc.m2[i] = m->m2[i];
    }
  }
  return acc;
}

struct UsedUnitsReport {
  std::array<std::size_t, 2> used{0, 0};
  std::array<std::size_t, 2> free{0, 0};
};

/// Append-only store of per-task binary masks.
class MaskStore {
 public:
  explicit MaskStore(std::size_t width) : width_(width) {}

  std::size_t width() const { return width_; }
  bool has(std::size_t task) const { return masks_.count(task) != 0; }
  std::size_t size() const { return masks_.size(); }

  const TaskMask& get(std::size_t task) const {
    auto it = masks_.find(task);
    if (it == masks_.end()) throw LookupError("no stored mask for task " + std::to_string(task));
    return it->second;
  }

  std::vector<std::size_t> task_ids() const {
    std::vector<std::size_t> ids;
    ids.reserve(masks_.size());
    for (const auto& [id, m] : masks_) ids.push_back(id);
    return ids;
  }

  /// Snapshot the task's gates at full anneal scale and binarize at 0.5.
  /// An embedding entry of exactly 0 rounds up, so the unit stays protected.
  const TaskMask& save(std::size_t task, const KnowledgeBase& kb) {
    if (masks_.count(task))
      throw StateError("mask for task " + std::to_string(task) + " already saved");
    const auto& sl = kb.slot(task);
    if (kb.config().width != width_) throw ShapeError("mask store width mismatch");
    TaskMask m{binarize(sl.e1.t.v, kb.config().s_max), binarize(sl.e2.t.v, kb.config().s_max)};
    return masks_.emplace(task, std::move(m)).first->second;
  }

  void put(std::size_t task, TaskMask m) {
    if (masks_.count(task))
      throw StateError("mask for task " + std::to_string(task) + " already saved");
    if (m.m1.size() != width_ || m.m2.size() != width_)
      throw ShapeError("mask store width mismatch");
    masks_.emplace(task, std::move(m));
  }

  AccumulatedMask accumulate(const std::vector<std::size_t>& tasks) const {
    std::vector<const TaskMask*> ptrs;
    ptrs.reserve(tasks.size());
    for (std::size_t t : tasks) ptrs.push_back(&get(t));
    return accumulate_masks(ptrs, width_);
  }

  UsedUnitsReport used_units_report() const {
    std::vector<std::size_t> all = task_ids();
    AccumulatedMask acc = accumulate(all);
    UsedUnitsReport r;
    for (double v : acc.m1)
      if (v != 0.0) ++r.used[0];
    for (double v : acc.m2)
      if (v != 0.0) ++r.used[1];
    r.free[0] = width_ - r.used[0];
    r.free[1] = width_ - r.used[1];
    return r;
  }

  /// One 0/1 row per task and layer, for eyeballing capacity use.
  void write_text(std::ostream& os) const {
    for (const auto& [id, m] : masks_) {
      for (int layer = 1; layer <= 2; ++layer) {
        os << "task " << id << " layer " << layer << " ";
        for (double v : layer == 1 ? m.m1 : m.m2) os << (v != 0.0 ? '1' : '0');
        os << '\n';
      }
    }
  }

 private:
  static std::vector<double> binarize(const std::vector<double>& e, double s_max) {
    std::vector<double> out(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double gate = 1.0 / (1.0 + std::exp(-s_max * e[i]));
      out[i] = gate >= 0.5 ? 1.0 : 0.0;
    }
    return out;
  }

  std::size_t width_;
  std::map<std::size_t, TaskMask> masks_;
};

/// Protects previously used units: gradient entries feeding a unit whose
/// accumulated mask is 1 are zeroed. A weight column holds all incoming
/// weights of one output unit, so blocking a unit blocks its whole column.
inline void install_blocking_hooks(KnowledgeBase& kb, const AccumulatedMask& acc) {
  const std::size_t w = kb.config().width;
  if (acc.m1.size() != w || acc.m2.size() != w)
    throw ShapeError("accumulated mask width mismatch");
  std::vector<double> keep1(w), keep2(w);
  for (std::size_t i = 0; i < w; ++i) {
    keep1[i] = 1.0 - acc.m1[i];
    keep2[i] = 1.0 - acc.m2[i];
  }
  kb.layer1_w().hook = column_keep_hook(keep1);
  kb.layer1_b().hook = elementwise_keep_hook(keep1);
  kb.layer2_w().hook = column_keep_hook(keep2);
  kb.layer2_b().hook = elementwise_keep_hook(keep2);
}

inline void remove_blocking_hooks(KnowledgeBase& kb) {
  kb.layer1_w().hook = nullptr;
  kb.layer1_b().hook = nullptr;
  kb.layer2_w().hook = nullptr;
  kb.layer2_b().hook = nullptr;
}

/// Masked KB features for a finished task, using its stored binary masks
/// under the current weights, evaluation mode.
inline Tensor forward_as_previous_task(const KnowledgeBase& kb, const MaskStore& store,
                                       const Tensor& x, std::size_t task) {
  if (!store.has(task))
    throw StateError("task " + std::to_string(task) + " has no stored mask yet");
  const TaskMask& m = store.get(task);
  return kb.forward_with_fixed_masks(x, m.m1, m.m2);
}

}  // namespace cat
