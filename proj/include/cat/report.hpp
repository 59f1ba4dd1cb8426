#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "cat/dataset.hpp"
#include "cat/errors.hpp"
#include "cat/learner.hpp"

namespace cat {

// ---- dataset fingerprints ---------------------------------------------------

inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 14695981039346656037ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t h) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  return fnv1a(b, 8, h);
}

inline std::uint64_t hash_split(const Split& s, std::uint64_t h) {
  h = fnv1a_u64(s.size(), h);
  h = fnv1a(s.x.v.data(), s.x.v.size() * sizeof(double), h);
  for (std::size_t y : s.y) h = fnv1a_u64(y, h);
  return h;
}

/// Order-sensitive fingerprint of a whole task sequence; any flipped bit in
/// any sample, label, or task attribute changes it.
inline std::uint64_t hash_sequence(const std::vector<TaskDataset>& tasks) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& t : tasks) {
    h = fnv1a_u64(t.task_id, h);
    h = fnv1a_u64(t.class_count, h);
    h = fnv1a_u64(std::uint64_t(std::int64_t(t.group)), h);
    h = fnv1a(t.provenance.data(), t.provenance.size(), h);
    h = hash_split(t.train, h);
    h = hash_split(t.valid, h);
    h = hash_split(t.test, h);
  }
  return h;
}

inline std::string hex_u64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---- similarity scoring -----------------------------------------------------

/// Expected similarity rows from construction-time group tags: tasks in the
/// same non-negative group are similar, everything else is not.
inline std::vector<std::vector<int>> ground_truth_bits(const std::vector<int>& groups) {
  std::vector<std::vector<int>> rows;
  for (std::size_t t = 1; t < groups.size(); ++t) {
    std::vector<int> row(t, 0);
    for (std::size_t k = 0; k < t; ++k)
      row[k] = (groups[t] >= 0 && groups[k] == groups[t]) ? 1 : 0;
    rows.push_back(std::move(row));
  }
  return rows;
}

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
};

/// Bitwise precision/recall of detected similarity against ground truth.
/// With no positive predictions precision is vacuously 1, and with no
/// positive truth recall is vacuously 1, so all-dissimilar sequences score
/// clean instead of dividing by zero.
inline PrecisionRecall score_tsv(const std::vector<std::vector<int>>& predicted,
                                 const std::vector<std::vector<int>>& truth) {
  if (predicted.size() != truth.size())
    throw InputError("similarity rows disagree with ground truth rows");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t r = 0; r < predicted.size(); ++r) {
    if (predicted[r].size() != truth[r].size())
      throw InputError("similarity row " + std::to_string(r + 1) + " has wrong length");
    for (std::size_t k = 0; k < predicted[r].size(); ++k) {
      const bool p = predicted[r][k] != 0, a = truth[r][k] != 0;
      tp += p && a;
      fp += p && !a;
      fn += !p && a;
    }
  }
  PrecisionRecall out;
  if (tp + fp > 0) out.precision = double(tp) / double(tp + fp);
  if (tp + fn > 0) out.recall = double(tp) / double(tp + fn);
  return out;
}

// ---- per-run summaries ------------------------------------------------------

inline std::vector<std::size_t> ids_in_group(const std::vector<int>& groups, bool similar) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < groups.size(); ++i)
    if ((groups[i] >= 0) == similar) ids.push_back(i);
  return ids;
}

/// Everything the aggregate report needs from one seed's finished run.
struct SeedOutcome {
  std::uint64_t seed = 0;
  AccuracyMatrix matrix;
  std::vector<std::vector<int>> tsv;
  std::vector<int> groups;
  std::vector<std::tuple<std::size_t, std::size_t, double>> attention;  // task, source, weight
  std::uint64_t sequence_hash = 0;

  double overall = 0.0;                    // mean final accuracy, all tasks
  std::optional<double> dissimilar_final;  // mean final accuracy per group
  std::optional<double> similar_final;
  std::optional<double> similar_first;  // mean accuracy when first learned
  PrecisionRecall tsv_quality;
};

/// Fills the derived fields from the raw matrix/tsv/group records.
inline void summarize_outcome(SeedOutcome& o) {
  const std::size_t n = o.matrix.tasks();
  if (n != o.groups.size()) throw InputError("group tags disagree with the accuracy matrix");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += o.matrix.after_all(i);
  o.overall = n ? sum / double(n) : 0.0;

  const TransferMetrics dis = transfer_metrics(o.matrix, ids_in_group(o.groups, false));
  const TransferMetrics sim = transfer_metrics(o.matrix, ids_in_group(o.groups, true));
  o.dissimilar_final = dis.backward_avg;
  o.similar_final = sim.backward_avg;
  o.similar_first = sim.forward_avg;
  o.tsv_quality = score_tsv(o.tsv, ground_truth_bits(o.groups));
}

/// Spec: per-seed records plus aggregates that stay recomputable from them.
struct RunReport {
  std::string variant;
  std::vector<SeedOutcome> seeds;
  double wall_seconds = 0.0;

  double overall_mean = 0.0;
  std::optional<double> dissimilar_final_mean;
  std::optional<double> similar_final_mean;
  std::optional<double> similar_first_mean;
  double precision_mean = 1.0;
  double recall_mean = 1.0;
};

inline void aggregate_report(RunReport& r) {
  if (r.seeds.empty()) throw InputError("report needs at least one finished seed");
  auto mean_opt = [&](auto pick) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : r.seeds)
      if (auto v = pick(s)) {
        sum += *v;
        ++n;
      }
    if (n == 0) return std::nullopt;
    return sum / double(n);
  };
  double overall = 0.0, prec = 0.0, rec = 0.0;
  for (const auto& s : r.seeds) {
    overall += s.overall;
    prec += s.tsv_quality.precision;
    rec += s.tsv_quality.recall;
  }
  r.overall_mean = overall / double(r.seeds.size());
  r.precision_mean = prec / double(r.seeds.size());
  r.recall_mean = rec / double(r.seeds.size());
  r.dissimilar_final_mean = mean_opt([](const SeedOutcome& s) { return s.dissimilar_final; });
  r.similar_final_mean = mean_opt([](const SeedOutcome& s) { return s.similar_final; });
  r.similar_first_mean = mean_opt([](const SeedOutcome& s) { return s.similar_first; });
}

// ---- CSV output ---------------------------------------------------------------

/// 17 significant digits parse back to the identical double, so reruns of a
/// deterministic experiment produce byte-identical files.
inline std::string csv_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_opt(const std::optional<double>& v) {
  return v ? csv_double(*v) : std::string();
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw FormatError(path + ": cannot open for writing");
  return os;
}

inline void write_matrix_csv(const std::string& path, const AccuracyMatrix& m) {
  auto os = open_out(path);
  os << "task,measured_after,accuracy\n";
  for (std::size_t i = 0; i < m.tasks(); ++i)
    for (std::size_t j = i; j < m.tasks(); ++j)
      os << i << "," << j << "," << csv_double(m.at(i, j)) << "\n";
  if (!os) throw FormatError(path + ": write failed");
}

inline void write_tsv_csv(const std::string& path, const std::vector<std::vector<int>>& rows) {
  auto os = open_out(path);
  os << "task,predecessor,similar\n";
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t k = 0; k < rows[r].size(); ++k)
      os << (r + 1) << "," << k << "," << rows[r][k] << "\n";
  if (!os) throw FormatError(path + ": write failed");
}

inline void write_attention_csv(
    const std::string& path,
    const std::vector<std::tuple<std::size_t, std::size_t, double>>& rows) {
  auto os = open_out(path);
  os << "task,source_task,mean_weight\n";
  for (const auto& [t, k, w] : rows) os << t << "," << k << "," << csv_double(w) << "\n";
  if (!os) throw FormatError(path + ": write failed");
}

inline void write_summary_csv(const std::string& path, const RunReport& r) {
  auto os = open_out(path);
  os << "seed,overall,dissimilar_final,similar_final,similar_first,tsv_precision,tsv_recall\n";
  for (const auto& s : r.seeds)
    os << s.seed << "," << csv_double(s.overall) << "," << csv_opt(s.dissimilar_final) << ","
       << csv_opt(s.similar_final) << "," << csv_opt(s.similar_first) << ","
       << csv_double(s.tsv_quality.precision) << "," << csv_double(s.tsv_quality.recall) << "\n";
  os << "mean," << csv_double(r.overall_mean) << "," << csv_opt(r.dissimilar_final_mean) << ","
     << csv_opt(r.similar_final_mean) << "," << csv_opt(r.similar_first_mean) << ","
     << csv_double(r.precision_mean) << "," << csv_double(r.recall_mean) << "\n";
  if (!os) throw FormatError(path + ": write failed");
}

}  // namespace cat
