#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cat/experiment.hpp"

using namespace cat;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

std::string fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir.string();
}

/// A config small enough that a full run takes seconds.
Json tiny_config(const std::string& out_dir, const std::string& variant) {
  return Json{
      {"name", "tiny"},
      {"output_dir", out_dir},
      {"seeds", {1, 2}},
      {"variant", variant},
      {"learner",
       {{"kb_width", 20},
        {"batch", 8},
        {"patience", 3},
        {"max_epochs", 12},
        {"detector",
         {{"lr", 0.1}, {"batch", 8}, {"patience", 3}, {"max_epochs", 10}, {"dropout", 0.3}}}}},
      {"sequence",
       {{"interleave_seed", 11},
        {"dissimilar",
         {{"source",
           {{"classes", 4},
            {"rows", 6},
            {"cols", 6},
            {"train_per_class", 30},
            {"test_per_class", 10},
            {"seed", 77},
            {"noise", 0.1},
            {"max_shift", 1}}},
          {"classes_per_task", 2},
          {"split_seed", 5},
          {"val_fraction", 0.2}}},
        {"similar",
         {{"source",
           {{"classes", 3},
            {"rows", 6},
            {"cols", 6},
            {"train_per_class", 40},
            {"test_per_class", 12},
            {"seed", 88},
            {"noise", 0.1},
            {"max_shift", 1}}},
          {"n_tasks", 2},
          {"generator_seed", 9},
          {"train_size", 60},
          {"test_size", 24},
          {"val_fraction", 0.2},
          {"max_rotation_deg", 2.0}}}}}};
}

}  // namespace

TEST_CASE("similarity scoring against construction-time groups", "[harness]") {
  // tasks: dis, simA, dis, simA  ->  rows for tasks 1..3
  const std::vector<int> groups{-1, 0, -1, 0};
  const auto truth = ground_truth_bits(groups);
  REQUIRE(truth == std::vector<std::vector<int>>{{0}, {0, 0}, {0, 1, 0}});

  SECTION("perfect detection") {
    const auto pr = score_tsv(truth, truth);
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
  }
  SECTION("misses every pair") {
    const std::vector<std::vector<int>> none{{0}, {0, 0}, {0, 0, 0}};
    const auto pr = score_tsv(none, truth);
    CHECK(pr.precision == 1.0);  // vacuous: nothing was claimed
    CHECK(pr.recall == 0.0);
  }
  SECTION("claims everything") {
    const std::vector<std::vector<int>> all{{1}, {1, 1}, {1, 1, 1}};
    const auto pr = score_tsv(all, truth);
    CHECK(pr.precision == Catch::Approx(1.0 / 6.0));
    CHECK(pr.recall == 1.0);
  }
  SECTION("no similar tasks at all") {
    const auto empty_truth = ground_truth_bits({-1, -1});
    const auto pr = score_tsv({{0}}, empty_truth);
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
  }
  SECTION("mismatched shapes are rejected") {
    CHECK_THROWS_AS(score_tsv({{0}}, truth), InputError);
    CHECK_THROWS_AS(score_tsv({{0}, {0}, {0, 1, 0}}, truth), InputError);
  }
}

TEST_CASE("byte hashing matches the published test vectors", "[harness]") {
  CHECK(fnv1a("", 0) == 14695981039346656037ULL);
  CHECK(fnv1a("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar", 6) == 0x85944171f73967e8ULL);
  CHECK(hex_u64(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");

  // order sensitivity: swapping two tasks changes the sequence fingerprint
  SourceData src = synthesize_image_classes(4, 6, 6, 20, 8, 3, 0.1, 1);
  DisjointOptions opt;
  opt.val_fraction = 0.25;
  auto tasks = split_disjoint_tasks(src, 2, 4, opt);
  REQUIRE(tasks.size() == 2);
  const std::uint64_t h = hash_sequence(tasks);
  CHECK(hash_sequence(tasks) == h);
  std::swap(tasks[0], tasks[1]);
  CHECK(hash_sequence(tasks) != h);
}

TEST_CASE("seed outcomes reduce to the reported aggregates", "[harness]") {
  SeedOutcome o;
  o.seed = 7;
  o.matrix.rows = {{0.5, 0.6, 0.7}, {0.8, 0.9}, {1.0}};
  o.tsv = {{0}, {0, 1}};
  o.groups = {-1, 0, 0};
  summarize_outcome(o);

  CHECK(o.overall == Catch::Approx((0.7 + 0.9 + 1.0) / 3.0));
  REQUIRE(o.dissimilar_final.has_value());
  CHECK(*o.dissimilar_final == Catch::Approx(0.7));
  REQUIRE(o.similar_final.has_value());
  CHECK(*o.similar_final == Catch::Approx(0.95));
  REQUIRE(o.similar_first.has_value());
  CHECK(*o.similar_first == Catch::Approx(0.9));
  // truth rows for groups {-1,0,0} are {0},{0,1}; the prediction matches
  CHECK(o.tsv_quality.precision == 1.0);
  CHECK(o.tsv_quality.recall == 1.0);

  RunReport r;
  r.variant = "CAT";
  r.seeds = {o, o};
  r.seeds[1].overall = 0.5;
  r.seeds[1].similar_first = 0.7;
  aggregate_report(r);
  CHECK(r.overall_mean == Catch::Approx((o.overall + 0.5) / 2.0));
  CHECK(*r.similar_first_mean == Catch::Approx((0.9 + 0.7) / 2.0));
  CHECK(r.precision_mean == 1.0);

  RunReport empty;
  CHECK_THROWS_AS(aggregate_report(empty), InputError);

  SeedOutcome bad;
  bad.matrix.rows = {{0.5}};
  bad.groups = {-1, 0};
  CHECK_THROWS_AS(summarize_outcome(bad), InputError);
}

TEST_CASE("config documents are validated strictly", "[harness]") {
  const std::string dir = fresh_dir("cat_harness_cfgcheck");

  SECTION("a full document parses into the right fields") {
    const ExperimentConfig cfg = parse_experiment_config(tiny_config(dir, "CAT"));
    CHECK(cfg.name == "tiny");
    CHECK(cfg.output_dir == dir);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2});
    CHECK(cfg.learner.variant == Variant::CAT);
    CHECK(cfg.learner.kb_width == 20);
    CHECK(cfg.learner.detector.max_epochs == 10);
    CHECK(cfg.learner.lr == 0.05);  // untouched default
    CHECK(cfg.sequence.dissimilar.enabled);
    CHECK(cfg.sequence.similar.enabled);
    CHECK(cfg.sequence.similar.options.train_size == 60);
    CHECK(cfg.sequence.interleave_seed == 11);
  }
  SECTION("unknown keys are rejected with their location") {
    Json doc = tiny_config(dir, "CAT");
    doc["learner"]["momentum"] = 0.9;
    try {
      parse_experiment_config(doc);
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("momentum") != std::string::npos);
      CHECK(std::string(e.what()).find("learner") != std::string::npos);
    }
  }
  SECTION("type errors are rejected") {
    Json doc = tiny_config(dir, "CAT");
    doc["learner"]["batch"] = "lots";
    CHECK_THROWS_AS(parse_experiment_config(doc), ConfigError);
    doc = tiny_config(dir, "CAT");
    doc["seeds"] = Json::array();
    CHECK_THROWS_AS(parse_experiment_config(doc), ConfigError);
  }
  SECTION("missing required fields are rejected") {
    Json doc = tiny_config(dir, "CAT");
    doc.erase("variant");
    CHECK_THROWS_AS(parse_experiment_config(doc), ConfigError);
    doc = tiny_config(dir, "CAT");
    doc.erase("output_dir");
    CHECK_THROWS_AS(parse_experiment_config(doc), ConfigError);
    doc = tiny_config(dir, "CAT");
    doc.erase("sequence");
    CHECK_THROWS_AS(parse_experiment_config(doc), ConfigError);
  }
  SECTION("attention knobs on a variant that never attends") {
    Json doc = tiny_config(dir, "ONE");
    doc["learner"]["kta"] = {{"heads", 5}};
    CHECK_THROWS_AS(parse_experiment_config(doc), ConfigError);
    doc["variant"] = "CAT";
    CHECK_NOTHROW(parse_experiment_config(doc));
  }
  SECTION("bundle excludes generated sources") {
    Json doc = tiny_config(dir, "CAT");
    doc["sequence"]["bundle"] = "whatever.bin";
    CHECK_THROWS_AS(parse_experiment_config(doc), ConfigError);
  }
  SECTION("unparseable text reports the position") {
    const std::string path = dir + "_broken.json";
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream(path) << "{ \"name\": }";
    CHECK_THROWS_AS(load_experiment_config(path), ConfigError);
    std::filesystem::remove(path);
  }
}

TEST_CASE("sequences rebuild identically per seed and reshuffle across seeds", "[harness]") {
  const ExperimentConfig cfg =
      parse_experiment_config(tiny_config(fresh_dir("cat_harness_seq"), "CAT"));

  const auto a1 = build_sequence(cfg.sequence, 1);
  const auto a2 = build_sequence(cfg.sequence, 1);
  const auto b = build_sequence(cfg.sequence, 2);

  REQUIRE(a1.size() == 4);  // two disjoint-class tasks and two style twins
  CHECK(hash_sequence(a1) == hash_sequence(a2));
  CHECK(hash_sequence(a1) != hash_sequence(b));

  std::vector<std::size_t> ids;
  std::size_t dis = 0, sim = 0;
  for (const auto& t : a1) {
    ids.push_back(t.task_id);
    (t.group < 0 ? dis : sim) += 1;
  }
  CHECK(ids == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(dis == 2);
  CHECK(sim == 2);

  SequenceSpec empty;
  CHECK_THROWS_AS(build_sequence(empty, 1), InputError);
}

TEST_CASE("a run writes per-seed records and reproducible aggregates", "[harness]") {
  const std::string dir = fresh_dir("cat_harness_run");
  const ExperimentConfig cfg = parse_experiment_config(tiny_config(dir, "CAT-all-dis"));

  const RunReport report = run_experiment(cfg);
  REQUIRE(report.seeds.size() == 2);
  CHECK(report.variant == "CAT-all-dis");
  for (const auto& s : report.seeds) {
    CHECK(s.matrix.tasks() == 4);
    CHECK(s.tsv.size() == 3);
    CHECK(s.attention.empty());  // this variant never attends
  }
  // forced all-dissimilar claims nothing, so precision is vacuous and recall 0
  CHECK(report.precision_mean == 1.0);
  CHECK(report.recall_mean == 0.0);

  for (const std::string f :
       {"summary.csv", "matrix_seed1.csv", "matrix_seed2.csv", "tsv_seed1.csv",
        "attention_seed1.csv", "manifest.json"})
    CHECK(std::filesystem::exists(std::filesystem::path(dir) / f));

  const Json manifest = Json::parse(read_file(dir + "/manifest.json"));
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["sequence_hash"].size() == 2);
  CHECK(manifest["config"]["variant"] == "CAT-all-dis");

  // the matrix rows on disk carry the same numbers the report holds
  const std::string matrix_csv = read_file(dir + "/matrix_seed1.csv");
  CHECK(matrix_csv.find("task,measured_after,accuracy") == 0);
  CHECK(matrix_csv.find(csv_double(report.seeds[0].matrix.at(0, 0))) != std::string::npos);

  SECTION("a rerun reproduces the summary byte for byte") {
    const std::string dir2 = fresh_dir("cat_harness_run_again");
    ExperimentConfig again = cfg;
    again.output_dir = dir2;
    run_experiment(again);
    CHECK(read_file(dir + "/summary.csv") == read_file(dir2 + "/summary.csv"));
    CHECK(read_file(dir + "/matrix_seed2.csv") == read_file(dir2 + "/matrix_seed2.csv"));
    std::filesystem::remove_all(dir2);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("a failing sequence leaves partial results and a FAILED marker", "[harness]") {
  const std::string dir = fresh_dir("cat_harness_failed");

  // two bundled tasks whose widths disagree: task 1 cannot enter the network
  SourceData a = synthesize_image_classes(4, 6, 6, 20, 8, 5, 0.1, 1);
  SourceData b = synthesize_image_classes(4, 5, 5, 20, 8, 6, 0.1, 1);
  DisjointOptions opt;
  opt.val_fraction = 0.25;
  auto ta = split_disjoint_tasks(a, 2, 7, opt);
  auto tb = split_disjoint_tasks(b, 2, 7, opt);
  std::vector<TaskDataset> broken{ta[0], tb[0]};
  broken[1].task_id = 1;
  std::filesystem::create_directories(dir);
  const std::string bundle = dir + "/broken_bundle.bin";
  write_bundle(bundle, broken);

  Json doc{{"name", "broken"},
           {"output_dir", dir},
           {"seeds", {1}},
           {"variant", "NCL"},
           {"learner", {{"kb_width", 16}, {"batch", 8}, {"patience", 2}, {"max_epochs", 4}}},
           {"sequence", {{"bundle", bundle}}}};
  const ExperimentConfig cfg = parse_experiment_config(doc);

  CHECK_THROWS_AS(run_experiment(cfg), InputError);
  const Json manifest = Json::parse(read_file(dir + "/manifest.json"));
  const std::string status = manifest["status"].get<std::string>();
  CHECK(status.rfind("FAILED:", 0) == 0);
  CHECK_FALSE(std::filesystem::exists(std::filesystem::path(dir) / "summary.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("the ablation grid shares sequences and reports five columns", "[harness]") {
  const std::string dir = fresh_dir("cat_harness_ablate");
  Json doc = tiny_config(dir, "CAT");
  doc["seeds"] = {3};
  const ExperimentConfig cfg = parse_experiment_config(doc);

  const AblationReport grid = run_ablation(cfg);
  REQUIRE(grid.columns.size() == 5);
  CHECK(grid.columns[0].first == "CAT-all-sim-KTA");
  CHECK(grid.columns[1].first == "CAT-all-sim");
  CHECK(grid.columns[2].first == "CAT-all-dis");
  CHECK(grid.columns[3].first == "CAT-KTA");
  CHECK(grid.columns[4].first == "CAT");

  const std::uint64_t h = grid.columns[0].second.seeds[0].sequence_hash;
  for (const auto& [name, r] : grid.columns) {
    REQUIRE(r.seeds.size() == 1);
    CHECK(r.seeds[0].sequence_hash == h);  // identical tasks for every variant
  }

  const std::string table = read_file(dir + "/ablation.csv");
  CHECK(table.find("metric,CAT-all-sim-KTA,CAT-all-sim,CAT-all-dis,CAT-KTA,CAT") == 0);
  CHECK(table.find("\noverall,") != std::string::npos);
  CHECK(table.find("\ntsv_recall,") != std::string::npos);
  for (const auto& [name, r] : grid.columns)
    CHECK(std::filesystem::exists(std::filesystem::path(dir) / name / "summary.csv"));
  std::filesystem::remove_all(dir);
}
