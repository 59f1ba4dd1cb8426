#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cat/errors.hpp"
#include "cat/idx.hpp"
#include "cat/rng.hpp"
#include "cat/tensor.hpp"

namespace cat {

/// Flat feature rows with labels over a shared class space.
struct LabeledData {
  Tensor x;  // [n x d]
  std::vector<std::size_t> y;
  std::size_t classes = 0;
  std::size_t rows = 0, cols = 0;  // image geometry; 0 when not an image

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return x.is_matrix() ? x.cols() : 0; }
};

struct SourceData {
  LabeledData train, test;
};

struct Split {
  Tensor x;
  std::vector<std::size_t> y;
  std::size_t size() const { return y.size(); }
};

struct TaskDataset {
  std::size_t task_id = 0;
  Split train, valid, test;
  std::size_t class_count = 0;
  std::string provenance;
  // tasks sharing a group id >= 0 were built as style variants of the same
  // source; -1 marks tasks with no construction-time twin
  int group = -1;
};

inline LabeledData idx_to_labeled(const IdxImages& images, const IdxLabels& labels) {
  if (images.count != labels.labels.size())
    throw FormatError("image count " + std::to_string(images.count) + " does not match " +
                      std::to_string(labels.labels.size()) + " labels");
  LabeledData out;
  const std::size_t d = images.rows * images.cols;
  out.x = Tensor(Shape{images.count, d}, images.pixels);
  out.y.resize(images.count);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < images.count; ++i) {
    out.y[i] = labels.labels[i];
    max_label = std::max(max_label, out.y[i]);
  }
  out.classes = max_label + 1;
  out.rows = images.rows;
  out.cols = images.cols;
  return out;
}

inline SourceData load_idx_source(const std::string& train_images, const std::string& train_labels,
                                  const std::string& test_images, const std::string& test_labels) {
  SourceData s;
  s.train = idx_to_labeled(parse_idx_images(train_images), parse_idx_labels(train_labels));
  s.test = idx_to_labeled(parse_idx_images(test_images), parse_idx_labels(test_labels));
  s.train.classes = s.test.classes = std::max(s.train.classes, s.test.classes);
  return s;
}

/// CSV with a header row; the column named "label" holds the class, all other
/// columns are numeric features.
inline LabeledData load_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError(path + ": cannot open");
  std::string line;
  if (!std::getline(f, line)) throw DataError(path + ": empty file");
  auto split_line = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  const auto header = split_line(line);
  std::size_t label_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == "label") label_col = i;
  if (label_col == header.size()) throw DataError(path + ": no column named 'label'");

  std::vector<double> feats;
  std::vector<std::string> raw_labels;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw DataError(path + ": row " + std::to_string(n + 2) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i == label_col) {
        raw_labels.push_back(cells[i]);
      } else {
        try {
          feats.push_back(std::stod(cells[i]));
        } catch (const std::exception&) {
          throw DataError(path + ": row " + std::to_string(n + 2) + " has non-numeric cell '" +
                          cells[i] + "'");
        }
      }
    }
    ++n;
  }
  std::map<std::string, std::size_t> label_index;
  for (const auto& l : raw_labels) label_index.emplace(l, 0);
  std::size_t next = 0;
  for (auto& [name, idx] : label_index) idx = next++;

  LabeledData out;
  out.x = Tensor(Shape{n, header.size() - 1}, std::move(feats));
  out.y.reserve(n);
  for (const auto& l : raw_labels) out.y.push_back(label_index[l]);
  out.classes = label_index.size();
  return out;
}

namespace detail {

inline Split gather(const LabeledData& src, const std::vector<std::size_t>& idx,
                    const std::map<std::size_t, std::size_t>& relabel) {
  const std::size_t d = src.dim();
  Split s;
  s.x = Tensor(Shape{idx.size(), d});
  s.y.resize(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy_n(src.x.v.begin() + std::ptrdiff_t(idx[r] * d), d,
                s.x.v.begin() + std::ptrdiff_t(r * d));
    s.y[r] = relabel.at(src.y[idx[r]]);
  }
  return s;
}

inline void carve_validation(TaskDataset& task, double val_fraction, bool val_same_as_train,
                             Rng& rng) {
  if (val_same_as_train) {
    task.valid = task.train;
    return;
  }
  const std::size_t n = task.train.size();
  std::size_t n_val = std::size_t(std::llround(double(n) * val_fraction));
  if (n_val == 0 && n > 1) n_val = 1;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  const std::size_t d = task.train.x.cols();
  Split tr, va;
  tr.x = Tensor(Shape{n - n_val, d});
  va.x = Tensor(Shape{n_val, d});
  for (std::size_t r = 0; r < n; ++r) {
    Split& dst = r < n_val ? va : tr;
    const std::size_t row = r < n_val ? r : r - n_val;
    std::copy_n(task.train.x.v.begin() + std::ptrdiff_t(order[r] * d), d,
                dst.x.v.begin() + std::ptrdiff_t(row * d));
    dst.y.push_back(task.train.y[order[r]]);
  }
  task.train = std::move(tr);
  task.valid = std::move(va);
}

inline std::vector<std::size_t> capped_sample(std::vector<std::size_t> pool, std::size_t cap,
                                              Rng& rng) {
  if (cap == 0 || pool.size() <= cap) return pool;
  rng.shuffle(pool);
  pool.resize(cap);
  return pool;
}

}  // namespace detail

struct DisjointOptions {
  std::size_t n_tasks = 0;         // 0: as many full tasks as fit, remainder joins the last
  std::size_t train_cap = 0;       // per task, 0 = keep everything
  std::size_t test_cap = 0;
  double val_fraction = 0.1;
  bool val_same_as_train = false;  // reuse the training set as validation
};

/// Partitions the class space into disjoint groups (shuffled order) and
/// builds one task per group. With n_tasks set, the first n_tasks-1 groups
/// take classes_per_task classes and the last absorbs the remainder.
inline std::vector<TaskDataset> split_disjoint_tasks(const SourceData& src,
                                                     std::size_t classes_per_task,
                                                     std::uint64_t seed,
                                                     DisjointOptions opt = {}) {
  const std::size_t n_classes = src.train.classes;
  if (classes_per_task < 2) throw InputError("need at least 2 classes per task");
  if (classes_per_task > n_classes)
    throw InputError(std::to_string(classes_per_task) + " classes per task exceeds " +
                     std::to_string(n_classes) + " available");

  Rng rng(seed);
  std::vector<std::size_t> classes(n_classes);
  for (std::size_t i = 0; i < n_classes; ++i) classes[i] = i;
  rng.shuffle(classes);

  std::size_t n_tasks = opt.n_tasks;
  if (n_tasks == 0) {
    n_tasks = n_classes / classes_per_task;
    if (n_classes % classes_per_task != 0) ++n_tasks;
  }
  if (n_tasks < 1 || (n_tasks - 1) * classes_per_task + 2 > n_classes)
    throw InputError("cannot form " + std::to_string(n_tasks) + " tasks of " +
                     std::to_string(classes_per_task) + " classes from " +
                     std::to_string(n_classes));

  std::vector<std::vector<std::size_t>> train_by_class(n_classes), test_by_class(n_classes);
  for (std::size_t i = 0; i < src.train.size(); ++i) train_by_class[src.train.y[i]].push_back(i);
  for (std::size_t i = 0; i < src.test.size(); ++i) test_by_class[src.test.y[i]].push_back(i);

  std::vector<TaskDataset> tasks;
  std::size_t next_class = 0;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    const bool last = t + 1 == n_tasks;
    const std::size_t take = last ? n_classes - next_class : classes_per_task;
    std::map<std::size_t, std::size_t> relabel;
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t c = 0; c < take; ++c) {
      const std::size_t cls = classes[next_class++];
      relabel[cls] = c;
      for (std::size_t i : train_by_class[cls]) train_idx.push_back(i);
      for (std::size_t i : test_by_class[cls]) test_idx.push_back(i);
    }
    train_idx = detail::capped_sample(std::move(train_idx), opt.train_cap, rng);
    test_idx = detail::capped_sample(std::move(test_idx), opt.test_cap, rng);

    TaskDataset task;
    task.task_id = t;
    task.class_count = take;
    task.provenance = "disjoint";
    task.train = detail::gather(src.train, train_idx, relabel);
    task.test = detail::gather(src.test, test_idx, relabel);
    detail::carve_validation(task, opt.val_fraction, opt.val_same_as_train, rng);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

namespace detail {

/// Rotates one rows x cols image by `angle` radians about its center,
/// bilinear sampling, zero fill outside.
inline void rotate_image(const double* in, double* out, std::size_t rows, std::size_t cols,
                         double angle) {
  const double cr = double(rows - 1) / 2.0, cc = double(cols - 1) / 2.0;
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double dr = double(r) - cr, dc = double(c) - cc;
      const double sr = ca * dr + sa * dc + cr;
      const double sc = -sa * dr + ca * dc + cc;
      double val = 0.0;
      const double fr = std::floor(sr), fc = std::floor(sc);
      if (fr >= -1.0 && fr < double(rows) && fc >= -1.0 && fc < double(cols)) {
        const double wr = sr - fr, wc = sc - fc;
        auto px = [&](double rr, double cc2) {
          if (rr < 0.0 || cc2 < 0.0 || rr >= double(rows) || cc2 >= double(cols)) return 0.0;
          return in[std::size_t(rr) * cols + std::size_t(cc2)];
        };
        val = (1 - wr) * (1 - wc) * px(fr, fc) + (1 - wr) * wc * px(fr, fc + 1) +
              wr * (1 - wc) * px(fr + 1, fc) + wr * wc * px(fr + 1, fc + 1);
      }
      out[r * cols + c] = val;
    }
}

}  // namespace detail

struct SimilarOptions {
  std::size_t train_size = 120;
  std::size_t test_size = 60;
  double val_fraction = 0.1;
  double max_rotation_deg = 15.0;
  double gain_lo = 0.8, gain_hi = 1.2;
  int group = 0;  // similarity group id stamped on every generated task
};

/// Builds style-variant tasks over one shared label space: each task is an
/// independent resample of the source with a fixed per-task rotation and
/// pixel gain, standing in for per-writer variation.
inline std::vector<TaskDataset> generate_similar_tasks(const SourceData& src,
                                                       std::size_t n_tasks, std::uint64_t seed,
                                                       SimilarOptions opt = {}) {
  if (src.train.rows == 0 || src.train.cols == 0)
    throw InputError("style-variant tasks need image-shaped features");
  if (src.train.size() < opt.train_size || src.test.size() < opt.test_size)
    throw InputError("source too small for requested task sizes");

  Rng rng(seed);
  const std::size_t d = src.train.dim();
  const std::size_t rows = src.train.rows, cols = src.train.cols;
  std::map<std::size_t, std::size_t> identity;
  for (std::size_t c = 0; c < src.train.classes; ++c) identity[c] = c;

  std::vector<TaskDataset> tasks;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    const double angle =
        rng.uniform(-opt.max_rotation_deg, opt.max_rotation_deg) * 3.14159265358979323846 /
        180.0;
    const double gain = rng.uniform(opt.gain_lo, opt.gain_hi);

    auto perturb = [&](Split& s) {
      std::vector<double> tmp(d);
      for (std::size_t r = 0; r < s.size(); ++r) {
        double* row = s.x.v.data() + r * d;
        detail::rotate_image(row, tmp.data(), rows, cols, angle);
        for (std::size_t j = 0; j < d; ++j) {
          double v = tmp[j] * gain;
          row[j] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        }
      }
    };

    std::vector<std::size_t> train_pool(src.train.size()), test_pool(src.test.size());
    for (std::size_t i = 0; i < train_pool.size(); ++i) train_pool[i] = i;
    for (std::size_t i = 0; i < test_pool.size(); ++i) test_pool[i] = i;
    train_pool = detail::capped_sample(std::move(train_pool), opt.train_size, rng);
    test_pool = detail::capped_sample(std::move(test_pool), opt.test_size, rng);

    TaskDataset task;
    task.task_id = t;
    task.class_count = src.train.classes;
    task.provenance = "similar";
    task.group = opt.group;
    task.train = detail::gather(src.train, train_pool, identity);
    task.test = detail::gather(src.test, test_pool, identity);
    perturb(task.train);
    perturb(task.test);
    detail::carve_validation(task, opt.val_fraction, false, rng);
    tasks.push_back(std::move(task));
  }
  return tasks;
}

/// Interleaves task lists under a seeded permutation and renumbers ids by
/// final position. Group tags ride along unchanged.
inline std::vector<TaskDataset> build_mixed_sequence(std::vector<TaskDataset> dissimilar,
                                                     std::vector<TaskDataset> similar,
                                                     std::uint64_t seed) {
  std::vector<TaskDataset> all;
  for (auto& t : dissimilar) {
    t.group = -1;
    all.push_back(std::move(t));
  }
  for (auto& t : similar) {
    if (t.group < 0) t.group = 0;
    all.push_back(std::move(t));
  }
  Rng rng(seed);
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<TaskDataset> seq;
  seq.reserve(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    seq.push_back(std::move(all[order[i]]));
    seq.back().task_id = i;
  }
  return seq;
}

/// Deterministic image-classification source: each class is a smoothed noise
/// prototype; samples are shifted, gain-scaled, noise-corrupted copies.
inline SourceData synthesize_image_classes(std::size_t n_classes, std::size_t rows,
                                           std::size_t cols, std::size_t train_per_class,
                                           std::size_t test_per_class, std::uint64_t seed,
                                           double noise = 0.15, int max_shift = 2) {
  if (n_classes < 2) throw InputError("need at least 2 classes");
  Rng rng(seed);
  const std::size_t d = rows * cols;

  std::vector<std::vector<double>> protos(n_classes, std::vector<double>(d));
  for (auto& p : protos) {
    for (auto& v : p) v = rng.next_double();
    // three passes of 3x3 box blur leave smooth class-specific blobs
    std::vector<double> tmp(d);
    for (int pass = 0; pass < 3; ++pass) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          double sum = 0.0;
          int cnt = 0;
          for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
              const long rr = long(r) + dr, cc = long(c) + dc;
              if (rr < 0 || cc < 0 || rr >= long(rows) || cc >= long(cols)) continue;
              sum += p[std::size_t(rr) * cols + std::size_t(cc)];
              ++cnt;
            }
          tmp[r * cols + c] = sum / cnt;
        }
      p = tmp;
    }
    // stretch to full contrast
    double lo = p[0], hi = p[0];
    for (double v : p) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (auto& v : p) v = hi > lo ? (v - lo) / (hi - lo) : 0.5;
  }

  auto make_split = [&](std::size_t per_class) {
    LabeledData data;
    const std::size_t n = per_class * n_classes;
    data.x = Tensor(Shape{n, d});
    data.y.resize(n);
    data.classes = n_classes;
    data.rows = rows;
    data.cols = cols;
    std::size_t row = 0;
    for (std::size_t c = 0; c < n_classes; ++c)
      for (std::size_t k = 0; k < per_class; ++k, ++row) {
        const int dr = int(rng.below(std::size_t(2 * max_shift + 1))) - max_shift;
        const int dc = int(rng.below(std::size_t(2 * max_shift + 1))) - max_shift;
        const double gain = rng.uniform(0.9, 1.1);
        double* out = data.x.v.data() + row * d;
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t cc = 0; cc < cols; ++cc) {
            const long sr = long(r) - dr, sc = long(cc) - dc;
            double v = 0.0;
            if (sr >= 0 && sc >= 0 && sr < long(rows) && sc < long(cols))
              v = protos[c][std::size_t(sr) * cols + std::size_t(sc)];
            v = v * gain + noise * rng.normal();
            out[r * cols + cc] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
          }
        data.y[row] = c;
      }
    return data;
  };

  SourceData s;
  s.train = make_split(train_per_class);
  s.test = make_split(test_per_class);
  return s;
}

// ---- task bundle container ------------------------------------------------

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = char(v >> (8 * i));
  os.write(b, 8);
}

inline std::uint64_t get_u64(std::istream& is, const std::string& what) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw FormatError("bundle: truncated reading " + what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

inline void put_doubles(std::ostream& os, const std::vector<double>& v) {
  put_u64(os, v.size());
  for (double d : v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(d));
    std::memcpy(&bits, &d, 8);
    put_u64(os, bits);
  }
}

inline std::vector<double> get_doubles(std::istream& is, const std::string& what) {
  const std::uint64_t n = get_u64(is, what);
  std::vector<double> v(n);
  for (auto& d : v) {
    const std::uint64_t bits = get_u64(is, what);
    std::memcpy(&d, &bits, 8);
  }
  return v;
}

inline void put_split(std::ostream& os, const Split& s, std::size_t d) {
  put_u64(os, s.size());
  put_doubles(os, s.x.v);
  put_u64(os, d);
  for (std::size_t l : s.y) put_u64(os, l);
}

inline Split get_split(std::istream& is, const std::string& what) {
  const std::uint64_t n = get_u64(is, what);
  auto vals = get_doubles(is, what);
  const std::uint64_t d = get_u64(is, what);
  if (vals.size() != n * d) throw FormatError("bundle: split size mismatch in " + what);
  Split s;
  s.x = Tensor(Shape{n, d}, std::move(vals));
  s.y.resize(n);
  for (auto& l : s.y) l = get_u64(is, what);
  return s;
}

}  // namespace detail

constexpr char kBundleMagic[8] = {'C', 'A', 'T', 'B', '_', '0', '0', '1'};

inline void write_bundle(const std::string& path, const std::vector<TaskDataset>& tasks) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path + ": cannot open for writing");
  os.write(kBundleMagic, 8);
  detail::put_u64(os, tasks.size());
  for (const auto& t : tasks) {
    detail::put_u64(os, t.task_id);
    detail::put_u64(os, t.class_count);
    detail::put_u64(os, std::uint64_t(std::int64_t(t.group)));
    detail::put_u64(os, t.provenance.size());
    os.write(t.provenance.data(), std::streamsize(t.provenance.size()));
    const std::size_t d = t.train.x.is_matrix() ? t.train.x.cols() : 0;
    detail::put_split(os, t.train, d);
    detail::put_split(os, t.valid, d);
    detail::put_split(os, t.test, d);
  }
  if (!os) throw FormatError(path + ": write failed");
}

inline std::vector<TaskDataset> read_bundle(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(path + ": cannot open");
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kBundleMagic, 8) != 0)
    throw FormatError(path + ": not a task bundle (bad magic)");
  const std::uint64_t n = detail::get_u64(is, "task count");
  std::vector<TaskDataset> tasks(n);
  for (auto& t : tasks) {
    t.task_id = detail::get_u64(is, "task id");
    t.class_count = detail::get_u64(is, "class count");
    t.group = int(std::int64_t(detail::get_u64(is, "group")));
    const std::uint64_t plen = detail::get_u64(is, "provenance");
    t.provenance.resize(plen);
    is.read(t.provenance.data(), std::streamsize(plen));
    if (!is) throw FormatError(path + ": truncated provenance");
    t.train = detail::get_split(is, "train");
    t.valid = detail::get_split(is, "valid");
    t.test = detail::get_split(is, "test");
  }
  return tasks;
}

// ---- sequence recipes -------------------------------------------------------

struct SyntheticSource {
  std::size_t classes = 6;
  std::size_t rows = 8, cols = 8;
  std::size_t train_per_class = 60, test_per_class = 15;
  std::uint64_t seed = 1;
  double noise = 0.15;
  int max_shift = 2;
};

struct DissimilarSpec {
  bool enabled = false;
  SyntheticSource source;
  std::size_t classes_per_task = 2;
  std::uint64_t split_seed = 1;  // base; the run seed is added on top
  DisjointOptions options;
};

struct SimilarSpec {
  bool enabled = false;
  SyntheticSource source;
  std::size_t n_tasks = 2;
  std::uint64_t generator_seed = 1;  // base; the run seed is added on top
  SimilarOptions options;
};

/// Recipe for one task sequence. Either a prebuilt bundle path, or synthetic
/// sources whose split/generation/interleaving seeds shift with the run seed
/// while the underlying class prototypes stay fixed, giving each run its own
/// task order over the same domain.
struct SequenceSpec {
  std::string bundle;  // when nonempty the bundle is the whole sequence
  DissimilarSpec dissimilar;
  SimilarSpec similar;
  std::uint64_t interleave_seed = 0;
};

inline std::vector<TaskDataset> build_sequence(const SequenceSpec& spec, std::uint64_t run_seed) {
  if (!spec.bundle.empty()) return read_bundle(spec.bundle);
  if (!spec.dissimilar.enabled && !spec.similar.enabled)
    throw InputError("sequence spec has no task source");

  std::vector<TaskDataset> dis, sim;
  if (spec.dissimilar.enabled) {
    const auto& d = spec.dissimilar;
    SourceData src =
        synthesize_image_classes(d.source.classes, d.source.rows, d.source.cols,
                                 d.source.train_per_class, d.source.test_per_class,
                                 d.source.seed, d.source.noise, d.source.max_shift);
    dis = split_disjoint_tasks(src, d.classes_per_task, d.split_seed + run_seed, d.options);
  }
  if (spec.similar.enabled) {
    const auto& s = spec.similar;
    SourceData src =
        synthesize_image_classes(s.source.classes, s.source.rows, s.source.cols,
                                 s.source.train_per_class, s.source.test_per_class,
                                 s.source.seed, s.source.noise, s.source.max_shift);
    sim = generate_similar_tasks(src, s.n_tasks, s.generator_seed + run_seed, s.options);
  }
  if (!spec.dissimilar.enabled) {
    for (auto& t : sim)
      if (t.group < 0) t.group = 0;
    return sim;
  }
  if (!spec.similar.enabled) {
    for (auto& t : dis) t.group = -1;
    return dis;
  }
  return build_mixed_sequence(std::move(dis), std::move(sim), spec.interleave_seed + run_seed);
}

}  // namespace cat
