#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "cat/errors.hpp"
#include "cat/rng.hpp"
#include "cat/tensor.hpp"

namespace cat {

inline std::size_t argmax_row(const Tensor& logits, std::size_t r) {
  const std::size_t c = logits.cols();
  std::size_t best = 0;
  for (std::size_t j = 1; j < c; ++j)
    if (logits.v[r * c + j] > logits.v[r * c + best]) best = j;
  return best;
}

inline double accuracy(const Tensor& logits, const std::vector<std::size_t>& y) {
  if (!logits.is_matrix() || logits.rows() != y.size())
    throw ShapeError("accuracy: logits " + shape_str(logits.shape) + " vs " +
                     std::to_string(y.size()) + " labels");
  if (y.empty()) throw InputError("accuracy of an empty set is undefined");
  std::size_t hits = 0;
  for (std::size_t r = 0; r < y.size(); ++r)
    if (argmax_row(logits, r) == y[r]) ++hits;
  return double(hits) / double(y.size());
}

/// Stop when validation accuracy has not improved for `patience` epochs.
struct EarlyStopper {
  std::size_t patience;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;

  explicit EarlyStopper(std::size_t p) : patience(p) {}

  // returns true when this epoch set a new best
  bool update(double val_acc, std::size_t epoch) {
    if (val_acc > best) {
      best = val_acc;
      best_epoch = epoch;
      return true;
    }
    return false;
  }
  bool should_stop(std::size_t epoch) const { return epoch - best_epoch >= patience; }
};

/// Shuffled minibatch index sets for one epoch; the final short batch is kept.
inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch,
                                                           Rng& rng) {
  if (batch == 0) throw InputError("batch size must be positive");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t end = std::min(n, start + batch);
    batches.emplace_back(order.begin() + std::ptrdiff_t(start),
                         order.begin() + std::ptrdiff_t(end));
  }
  return batches;
}

inline Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  const std::size_t d = x.cols();
  Tensor out(Shape{idx.size(), d});
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy_n(x.v.begin() + std::ptrdiff_t(idx[r] * d), d,
                out.v.begin() + std::ptrdiff_t(r * d));
  return out;
}

inline std::vector<std::size_t> gather_labels(const std::vector<std::size_t>& y,
                                              const std::vector<std::size_t>& idx) {
  std::vector<std::size_t> out(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) out[r] = y[idx[r]];
  return out;
}

}  // namespace cat
