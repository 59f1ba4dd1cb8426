// Command-line front end: config-driven experiment runs, the ablation grid,
// checkpoint inspection, and task-bundle preparation.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cat/cat.hpp"

namespace {

using namespace cat;

ExperimentConfig load_config(const std::string& path, const std::string& output_dir,
                             const std::string& variant,
                             const std::vector<std::uint64_t>& seeds) {
  ExperimentConfig cfg = load_experiment_config(resolve_data_path(path));
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  if (!variant.empty()) cfg.learner.variant = variant_from_name(variant);
  if (!seeds.empty()) cfg.seeds = seeds;
  return cfg;
}

void print_report(const RunReport& r) {
  std::printf("variant %s, %zu seed(s), %.1fs\n", r.variant.c_str(), r.seeds.size(),
              r.wall_seconds);
  std::printf("  overall accuracy      %.4f\n", r.overall_mean);
  if (r.dissimilar_final_mean)
    std::printf("  dissimilar-task group %.4f\n", *r.dissimilar_final_mean);
  if (r.similar_final_mean)
    std::printf("  similar-task group    %.4f (first learned %.4f)\n", *r.similar_final_mean,
                r.similar_first_mean ? *r.similar_first_mean : 0.0);
  std::printf("  similarity precision  %.4f, recall %.4f\n", r.precision_mean, r.recall_mean);
}

int cmd_run(const std::string& config, const std::string& output_dir, const std::string& variant,
            const std::vector<std::uint64_t>& seeds) {
  const ExperimentConfig cfg = load_config(config, output_dir, variant, seeds);
  const RunReport report = run_experiment(cfg);
  print_report(report);
  std::printf("reports written to %s\n", cfg.output_dir.c_str());
  return 0;
}

int cmd_ablate(const std::string& config, const std::string& output_dir,
               const std::vector<std::uint64_t>& seeds) {
  const ExperimentConfig cfg = load_config(config, output_dir, "", seeds);
  const AblationReport grid = run_ablation(cfg);
  for (const auto& [name, report] : grid.columns) print_report(report);
  std::printf("comparison table written to %s/ablation.csv\n", cfg.output_dir.c_str());
  return 0;
}

int cmd_inspect(const std::string& checkpoint, const std::string& what) {
  ContinualLearner learner = load_checkpoint(resolve_data_path(checkpoint));
  std::printf("%s learner, %zu task(s) learned\n",
              variant_name(learner.config().variant), learner.tasks_learned());

  if (what == "masks") {
    const MaskStore& store = learner.masks();
    std::printf("%zu stored mask(s), width %zu\n", store.size(), store.width());
    for (std::size_t t : store.task_ids()) {
      const TaskMask& m = store.get(t);
      std::size_t u1 = 0, u2 = 0;
      for (double v : m.m1) u1 += v != 0.0;
      for (double v : m.m2) u2 += v != 0.0;
      std::printf("  task %zu uses %zu/%zu layer-1 units, %zu/%zu layer-2 units\n", t, u1,
                  store.width(), u2, store.width());
    }
    if (store.size() > 0) {
      const UsedUnitsReport r = store.used_units_report();
      std::printf("combined: layer 1 %zu used / %zu free, layer 2 %zu used / %zu free\n",
                  r.used[0], r.free[0], r.used[1], r.free[1]);
    }
    return 0;
  }

  if (what == "tsv") {
    const auto& rows = learner.tsv_rows();
    if (rows.empty()) {
      std::printf("no similarity rows yet\n");
      return 0;
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::printf("task %zu:", r + 1);
      for (int b : rows[r]) std::printf(" %d", b);
      std::printf("\n");
    }
    return 0;
  }

  if (what == "attention") {
    const auto& summaries = learner.attention_summaries();
    if (summaries.empty()) {
      std::printf("no attention blocks stored\n");
      return 0;
    }
    for (const auto& [task, means] : summaries) {
      const auto sources = learner.similar_of(task);
      std::printf("task %zu attends over:", task);
      for (std::size_t i = 0; i < sources.size(); ++i)
        std::printf(" task %zu (%.4f)", sources[i], means[i]);
      std::printf("\n");
    }
    return 0;
  }

  throw ConfigError("inspect target must be masks, tsv or attention, not '" + what + "'");
}

int cmd_prepare(const std::string& config, std::uint64_t seed, const std::string& out,
                const std::string& train_images, const std::string& train_labels,
                const std::string& test_images, const std::string& test_labels,
                std::size_t classes_per_task, std::size_t n_tasks, std::size_t train_cap,
                std::size_t test_cap, double val_fraction, bool val_same_as_train,
                std::uint64_t split_seed) {
  std::vector<TaskDataset> tasks;
  if (!config.empty()) {
    const ExperimentConfig cfg = load_experiment_config(resolve_data_path(config));
    tasks = build_sequence(cfg.sequence, seed);
  } else {
    if (train_images.empty() || train_labels.empty() || test_images.empty() ||
        test_labels.empty())
      throw ConfigError("prepare-data needs either --config or all four idx paths");
    const SourceData src =
        load_idx_source(resolve_data_path(train_images), resolve_data_path(train_labels),
                        resolve_data_path(test_images), resolve_data_path(test_labels));
    DisjointOptions opt;
    opt.n_tasks = n_tasks;
    opt.train_cap = train_cap;
    opt.test_cap = test_cap;
    opt.val_fraction = val_fraction;
    opt.val_same_as_train = val_same_as_train;
    tasks = split_disjoint_tasks(src, classes_per_task, split_seed, opt);
  }
  write_bundle(out, tasks);
  std::printf("wrote %zu task(s) to %s (fingerprint %s)\n", tasks.size(), out.c_str(),
              hex_u64(hash_sequence(tasks)).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continual-learning benchmark over a shared masked network"};
  app.require_subcommand(1);

  std::string config, output_dir, variant, checkpoint, what = "masks", out;
  std::string train_images, train_labels, test_images, test_labels;
  std::vector<std::uint64_t> seeds;
  std::uint64_t seed = 0, split_seed = 1;
  std::size_t classes_per_task = 2, n_tasks = 0, train_cap = 0, test_cap = 0;
  double val_fraction = 0.1;
  bool val_same_as_train = false;

  CLI::App* run = app.add_subcommand("run", "train the configured variant across seeds");
  run->add_option("--config", config, "experiment document (json)")->required();
  run->add_option("--output-dir", output_dir, "overrides the configured output directory");
  run->add_option("--variant", variant, "overrides the configured variant");
  run->add_option("--seeds", seeds, "overrides the configured seed list");

  CLI::App* ablate = app.add_subcommand("ablate", "run the five-variant comparison grid");
  ablate->add_option("--config", config, "experiment document (json)")->required();
  ablate->add_option("--output-dir", output_dir, "overrides the configured output directory");
  ablate->add_option("--seeds", seeds, "overrides the configured seed list");

  CLI::App* inspect = app.add_subcommand("inspect", "dump state from a saved checkpoint");
  inspect->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  inspect->add_option("--what", what, "masks, tsv or attention");

  CLI::App* prepare = app.add_subcommand("prepare-data", "build a reusable task bundle");
  prepare->add_option("--out", out, "bundle file to write")->required();
  prepare->add_option("--config", config, "take the sequence from this experiment document");
  prepare->add_option("--seed", seed, "run seed for the generated sequence");
  prepare->add_option("--train-images", train_images, "idx image file");
  prepare->add_option("--train-labels", train_labels, "idx label file");
  prepare->add_option("--test-images", test_images, "idx image file");
  prepare->add_option("--test-labels", test_labels, "idx label file");
  prepare->add_option("--classes-per-task", classes_per_task, "disjoint split width");
  prepare->add_option("--n-tasks", n_tasks, "task count (0 = as many as fit)");
  prepare->add_option("--train-cap", train_cap, "per-task training sample cap");
  prepare->add_option("--test-cap", test_cap, "per-task test sample cap");
  prepare->add_option("--val-fraction", val_fraction, "validation share carved from train");
  prepare->add_flag("--val-same-as-train", val_same_as_train, "reuse train as validation");
  prepare->add_option("--split-seed", split_seed, "class shuffling seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config, output_dir, variant, seeds);
    if (ablate->parsed()) return cmd_ablate(config, output_dir, seeds);
    if (inspect->parsed()) return cmd_inspect(checkpoint, what);
    return cmd_prepare(config, seed, out, train_images, train_labels, test_images, test_labels,
                       classes_per_task, n_tasks, train_cap, test_cap, val_fraction,
                       val_same_as_train, split_seed);
  } catch (const cat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const cat::FormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const cat::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const cat::InputError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 3;
  }
}
