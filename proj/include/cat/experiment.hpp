#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cat/checkpoint.hpp"
#include "cat/dataset.hpp"
#include "cat/errors.hpp"
#include "cat/learner.hpp"
#include "cat/report.hpp"

namespace cat {

using Json = nlohmann::json;

struct ExperimentConfig {
  std::string name = "experiment";
  std::string output_dir;
  std::vector<std::uint64_t> seeds;
  LearnerConfig learner;
  SequenceSpec sequence;
  Json echo;  // the validated document, kept for the manifest
};

namespace cfgdetail {

inline void require_object(const Json& j, const std::string& where,
                           std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

inline double get_num(const Json& j, const char* key, const std::string& where, double def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number()) throw ConfigError(where + "." + key + " must be a number");
  return j[key].get<double>();
}

inline bool is_nonneg_int(const Json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

inline std::uint64_t get_uint(const Json& j, const char* key, const std::string& where,
                              std::uint64_t def) {
  if (!j.contains(key)) return def;
  if (!is_nonneg_int(j[key]))
    throw ConfigError(where + "." + key + " must be a non-negative integer");
  return j[key].get<std::uint64_t>();
}

inline bool get_bool(const Json& j, const char* key, const std::string& where, bool def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_boolean()) throw ConfigError(where + "." + key + " must be true or false");
  return j[key].get<bool>();
}

inline std::string get_str(const Json& j, const char* key, const std::string& where,
                           const std::string& def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_string()) throw ConfigError(where + "." + key + " must be a string");
  return j[key].get<std::string>();
}

inline SyntheticSource parse_source(const Json& j, const std::string& where) {
  require_object(j, where,
                 {"classes", "rows", "cols", "train_per_class", "test_per_class", "seed",
                  "noise", "max_shift"});
  SyntheticSource s;
  s.classes = get_uint(j, "classes", where, s.classes);
  s.rows = get_uint(j, "rows", where, s.rows);
  s.cols = get_uint(j, "cols", where, s.cols);
  s.train_per_class = get_uint(j, "train_per_class", where, s.train_per_class);
  s.test_per_class = get_uint(j, "test_per_class", where, s.test_per_class);
  s.seed = get_uint(j, "seed", where, s.seed);
  s.noise = get_num(j, "noise", where, s.noise);
  s.max_shift = int(get_uint(j, "max_shift", where, std::uint64_t(s.max_shift)));
  return s;
}

}  // namespace cfgdetail

/// Resolves a relative data path against the CAT_DATA_ROOT environment
/// variable when it is set; absolute paths pass through untouched.
inline std::string resolve_data_path(const std::string& path) {
  if (path.empty()) return path;
  if (std::filesystem::path(path).is_absolute()) return path;
  const char* root = std::getenv("CAT_DATA_ROOT");
  if (!root || !*root) return path;
  return (std::filesystem::path(root) / path).string();
}

/// Validates the whole document up front: every key is checked against the
/// schema and nothing trains until the config is fully accepted.
inline ExperimentConfig parse_experiment_config(const Json& doc) {
  using namespace cfgdetail;
  require_object(doc, "config",
                 {"name", "output_dir", "seeds", "variant", "learner", "sequence"});

  ExperimentConfig cfg;
  cfg.echo = doc;
  cfg.name = get_str(doc, "name", "config", cfg.name);
  cfg.output_dir = get_str(doc, "output_dir", "config", "");
  if (cfg.output_dir.empty()) throw ConfigError("config.output_dir is required");

  if (!doc.contains("seeds") || !doc["seeds"].is_array() || doc["seeds"].empty())
    throw ConfigError("config.seeds must be a non-empty array");
  for (const auto& s : doc["seeds"]) {
    if (!cfgdetail::is_nonneg_int(s))
      throw ConfigError("config.seeds entries must be non-negative integers");
    cfg.seeds.push_back(s.get<std::uint64_t>());
  }

  if (!doc.contains("variant")) throw ConfigError("config.variant is required");
  if (!doc["variant"].is_string()) throw ConfigError("config.variant must be a string");
  cfg.learner.variant = variant_from_name(doc["variant"].get<std::string>());

  bool kta_given = false;
  if (doc.contains("learner")) {
    const Json& l = doc["learner"];
    require_object(l, "learner",
                   {"s_max", "lr", "batch", "patience", "max_epochs", "kb_width", "dropout",
                    "detector", "kta"});
    LearnerConfig& lc = cfg.learner;
    lc.s_max = get_num(l, "s_max", "learner", lc.s_max);
    lc.lr = get_num(l, "lr", "learner", lc.lr);
    lc.batch = get_uint(l, "batch", "learner", lc.batch);
    lc.patience = get_uint(l, "patience", "learner", lc.patience);
    lc.max_epochs = get_uint(l, "max_epochs", "learner", lc.max_epochs);
    lc.kb_width = get_uint(l, "kb_width", "learner", lc.kb_width);
    lc.dropout = get_num(l, "dropout", "learner", lc.dropout);
    if (l.contains("detector")) {
      const Json& d = l["detector"];
      require_object(d, "learner.detector", {"lr", "batch", "patience", "max_epochs", "dropout"});
      lc.detector.lr = get_num(d, "lr", "learner.detector", lc.detector.lr);
      lc.detector.batch = get_uint(d, "batch", "learner.detector", lc.detector.batch);
      lc.detector.patience = get_uint(d, "patience", "learner.detector", lc.detector.patience);
      lc.detector.max_epochs =
          get_uint(d, "max_epochs", "learner.detector", lc.detector.max_epochs);
      lc.detector.dropout = get_num(d, "dropout", "learner.detector", lc.detector.dropout);
    }
    if (l.contains("kta")) {
      kta_given = true;
      const Json& k = l["kta"];
      require_object(k, "learner.kta", {"heads"});
      lc.heads = get_uint(k, "heads", "learner.kta", lc.heads);
    }
  }
  if (kta_given && !variant_uses_attention(cfg.learner.variant))
    throw ConfigError("variant " + std::string(variant_name(cfg.learner.variant)) +
                      " never uses the attention block; remove learner.kta");

  if (!doc.contains("sequence")) throw ConfigError("config.sequence is required");
  const Json& q = doc["sequence"];
  require_object(q, "sequence", {"bundle", "interleave_seed", "dissimilar", "similar"});
  cfg.sequence.bundle = resolve_data_path(get_str(q, "bundle", "sequence", ""));
  if (!cfg.sequence.bundle.empty() &&
      (q.contains("dissimilar") || q.contains("similar") || q.contains("interleave_seed")))
    throw ConfigError("sequence.bundle replaces the generated sources; remove the others");
  cfg.sequence.interleave_seed = get_uint(q, "interleave_seed", "sequence", 0);

  if (q.contains("dissimilar")) {
    const Json& d = q["dissimilar"];
    require_object(d, "sequence.dissimilar",
                   {"source", "classes_per_task", "split_seed", "n_tasks", "train_cap",
                    "test_cap", "val_fraction", "val_same_as_train"});
    DissimilarSpec& ds = cfg.sequence.dissimilar;
    ds.enabled = true;
    if (d.contains("source")) ds.source = parse_source(d["source"], "sequence.dissimilar.source");
    ds.classes_per_task = get_uint(d, "classes_per_task", "sequence.dissimilar", 2);
    ds.split_seed = get_uint(d, "split_seed", "sequence.dissimilar", 1);
    ds.options.n_tasks = get_uint(d, "n_tasks", "sequence.dissimilar", 0);
    ds.options.train_cap = get_uint(d, "train_cap", "sequence.dissimilar", 0);
    ds.options.test_cap = get_uint(d, "test_cap", "sequence.dissimilar", 0);
    ds.options.val_fraction = get_num(d, "val_fraction", "sequence.dissimilar", 0.1);
    ds.options.val_same_as_train = get_bool(d, "val_same_as_train", "sequence.dissimilar", false);
  }
  if (q.contains("similar")) {
    const Json& s = q["similar"];
    require_object(s, "sequence.similar",
                   {"source", "n_tasks", "generator_seed", "train_size", "test_size",
                    "val_fraction", "max_rotation_deg", "gain_lo", "gain_hi"});
    SimilarSpec& ss = cfg.sequence.similar;
    ss.enabled = true;
    if (s.contains("source")) ss.source = parse_source(s["source"], "sequence.similar.source");
    ss.n_tasks = get_uint(s, "n_tasks", "sequence.similar", 2);
    ss.generator_seed = get_uint(s, "generator_seed", "sequence.similar", 1);
    ss.options.train_size = get_uint(s, "train_size", "sequence.similar", 120);
    ss.options.test_size = get_uint(s, "test_size", "sequence.similar", 60);
    ss.options.val_fraction = get_num(s, "val_fraction", "sequence.similar", 0.1);
    ss.options.max_rotation_deg = get_num(s, "max_rotation_deg", "sequence.similar", 15.0);
    ss.options.gain_lo = get_num(s, "gain_lo", "sequence.similar", 0.8);
    ss.options.gain_hi = get_num(s, "gain_hi", "sequence.similar", 1.2);
  }
  if (cfg.sequence.bundle.empty() && !cfg.sequence.dissimilar.enabled &&
      !cfg.sequence.similar.enabled)
    throw ConfigError("sequence needs a bundle or at least one generated source");
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path + ": cannot open config");
  Json doc;
  try {
    doc = Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_experiment_config(doc);
}

// ---- drivers ----------------------------------------------------------------

/// Learns the configured sequence once per seed and writes per-seed CSVs as
/// each seed finishes, so a crash still leaves the finished seeds on disk
/// next to a manifest marked FAILED.
inline RunReport run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const auto started = std::chrono::steady_clock::now();

  RunReport report;
  report.variant = variant_name(cfg.learner.variant);

  Json manifest;
  manifest["name"] = cfg.name;
  manifest["variant"] = report.variant;
  manifest["config"] = cfg.echo;
  manifest["sequence_hash"] = Json::object();
  auto manifest_path = (fs::path(cfg.output_dir) / "manifest.json").string();
  auto write_manifest = [&](const std::string& status) {
    manifest["status"] = status;
    manifest["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    auto os = open_out(manifest_path);
    os << manifest.dump(2) << "\n";
  };

  try {
    for (std::uint64_t seed : cfg.seeds) {
      const std::vector<TaskDataset> tasks = build_sequence(cfg.sequence, seed);

      LearnerConfig lc = cfg.learner;
      lc.seed = seed;
      ContinualLearner learner(lc);
      learner.learn_sequence(tasks);

      SeedOutcome o;
      o.seed = seed;
      o.matrix = learner.matrix();
      o.tsv = learner.tsv_rows();
      o.sequence_hash = hash_sequence(tasks);
      for (const auto& t : tasks) o.groups.push_back(t.group);
      for (const auto& [task, means] : learner.attention_summaries()) {
        const auto sources = learner.similar_of(task);
        for (std::size_t i = 0; i < sources.size(); ++i)
          o.attention.emplace_back(task, sources[i], means[i]);
      }
      summarize_outcome(o);

      const std::string tag = "_seed" + std::to_string(seed) + ".csv";
      write_matrix_csv((fs::path(cfg.output_dir) / ("matrix" + tag)).string(), o.matrix);
      write_tsv_csv((fs::path(cfg.output_dir) / ("tsv" + tag)).string(), o.tsv);
      write_attention_csv((fs::path(cfg.output_dir) / ("attention" + tag)).string(),
                          o.attention);
      save_checkpoint(learner, (fs::path(cfg.output_dir) /
                                ("checkpoint_seed" + std::to_string(seed) + ".bin"))
                                   .string());
      manifest["sequence_hash"][std::to_string(seed)] = hex_u64(o.sequence_hash);
      report.seeds.push_back(std::move(o));
    }
    aggregate_report(report);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_summary_csv((fs::path(cfg.output_dir) / "summary.csv").string(), report);
    write_manifest("ok");
  } catch (const std::exception& e) {
    write_manifest(std::string("FAILED: ") + e.what());
    throw;
  }
  return report;
}

struct AblationReport {
  std::vector<std::pair<std::string, RunReport>> columns;  // grid order
};

/// Runs the ablation grid on identical per-seed sequences (the sequence only
/// depends on the config and the seed, never on the variant) and writes one
/// comparison table plus a full per-variant report tree.
inline AblationReport run_ablation(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);

  AblationReport out;
  for (Variant v : ablation_variants()) {
    ExperimentConfig sub = cfg;
    sub.learner.variant = v;
    sub.output_dir = (fs::path(cfg.output_dir) / variant_name(v)).string();
    out.columns.emplace_back(variant_name(v), run_experiment(sub));
  }

  auto os = open_out((fs::path(cfg.output_dir) / "ablation.csv").string());
  os << "metric";
  for (const auto& [name, r] : out.columns) os << "," << name;
  os << "\n";
  auto row = [&](const char* metric, auto pick) {
    os << metric;
    for (const auto& [name, r] : out.columns) {
      const auto v = pick(r);
      os << "," << (v ? csv_double(*v) : std::string());
    }
    os << "\n";
  };
  row("overall", [](const RunReport& r) { return std::optional<double>(r.overall_mean); });
  row("dissimilar_final", [](const RunReport& r) { return r.dissimilar_final_mean; });
  row("similar_final", [](const RunReport& r) { return r.similar_final_mean; });
  row("similar_first", [](const RunReport& r) { return r.similar_first_mean; });
  row("tsv_precision", [](const RunReport& r) { return std::optional<double>(r.precision_mean); });
  row("tsv_recall", [](const RunReport& r) { return std::optional<double>(r.recall_mean); });
  if (!os) throw FormatError("ablation.csv: write failed");
  return out;
}

}  // namespace cat
