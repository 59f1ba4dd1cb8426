#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cat/checkpoint.hpp"

using namespace cat;

namespace {

std::vector<TaskDataset> disjoint_tasks(std::uint64_t seed) {
  SourceData src = synthesize_image_classes(6, 8, 8, 60, 15, seed, 0.10, 1);
  DisjointOptions opt;
  opt.val_fraction = 0.2;
  return split_disjoint_tasks(src, 2, seed + 1, opt);
}

std::vector<TaskDataset> twin_tasks(std::uint64_t seed) {
  SourceData src = synthesize_image_classes(4, 8, 8, 80, 20, seed, 0.10, 1);
  SimilarOptions opt;
  opt.train_size = 160;
  opt.test_size = 48;
  opt.val_fraction = 0.2;
  opt.max_rotation_deg = 2.0;
  return generate_similar_tasks(src, 2, seed + 50, opt);
}

LearnerConfig small_config(Variant v, std::uint64_t seed) {
  LearnerConfig cfg;
  cfg.variant = v;
  cfg.kb_width = 25;
  cfg.batch = 8;
  cfg.patience = 5;
  cfg.max_epochs = 40;
  cfg.seed = seed;
  cfg.detector.lr = 0.1;
  cfg.detector.batch = 8;
  cfg.detector.patience = 5;
  cfg.detector.max_epochs = 30;
  cfg.detector.dropout = 0.3;
  return cfg;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("a reloaded learner reproduces the saved run bit for bit", "[checkpoint]") {
  auto tasks = twin_tasks(905);
  ContinualLearner learner(small_config(Variant::CAT_all_sim, 5));
  learner.learn_sequence(tasks);
  REQUIRE(learner.kta_block_count() == 1);

  const std::string first = temp_path("cat_ckpt_roundtrip_a.bin");
  const std::string second = temp_path("cat_ckpt_roundtrip_b.bin");
  save_checkpoint(learner, first);
  ContinualLearner loaded = load_checkpoint(first);
  save_checkpoint(loaded, second);

  CHECK(file_bytes(first) == file_bytes(second));

  CHECK(loaded.config().variant == Variant::CAT_all_sim);
  CHECK(loaded.config().seed == 5);
  CHECK(loaded.tasks_learned() == 2);
  CHECK(loaded.matrix() == learner.matrix());
  CHECK(loaded.tsv_rows() == learner.tsv_rows());
  CHECK(loaded.attention_summaries() == learner.attention_summaries());
  REQUIRE(loaded.has_kta(1));
  CHECK_FALSE(loaded.has_kta(0));

  REQUIRE(loaded.masks().task_ids() == learner.masks().task_ids());
  for (std::size_t t : loaded.masks().task_ids()) {
    CHECK(loaded.masks().get(t).m1 == learner.masks().get(t).m1);
    CHECK(loaded.masks().get(t).m2 == learner.masks().get(t).m2);
  }

  for (std::size_t t = 0; t < 2; ++t)
    CHECK(loaded.predict(t, tasks[t].test.x).v == learner.predict(t, tasks[t].test.x).v);

  std::filesystem::remove(first);
  std::filesystem::remove(second);
}

TEST_CASE("resuming mid-sequence matches an uninterrupted run", "[checkpoint]") {
  auto tasks = disjoint_tasks(502);
  const LearnerConfig cfg = small_config(Variant::CAT, 2);

  ContinualLearner straight(cfg);
  straight.learn_sequence(tasks);

  const std::string mid = temp_path("cat_ckpt_mid.bin");
  ContinualLearner interrupted(cfg);
  interrupted.learn_task(tasks[0]);
  interrupted.learn_task(tasks[1]);
  save_checkpoint(interrupted, mid);

  ContinualLearner resumed = load_checkpoint(mid);
  REQUIRE(resumed.tasks_learned() == 2);
  resumed.learn_task(tasks[2]);

  REQUIRE(resumed.matrix() == straight.matrix());
  REQUIRE(resumed.tsv_rows() == straight.tsv_rows());
  for (std::size_t t = 0; t < 3; ++t)
    CHECK(resumed.predict(t, tasks[t].test.x).v == straight.predict(t, tasks[t].test.x).v);

  const std::string final_a = temp_path("cat_ckpt_final_a.bin");
  const std::string final_b = temp_path("cat_ckpt_final_b.bin");
  save_checkpoint(straight, final_a);
  save_checkpoint(resumed, final_b);
  CHECK(file_bytes(final_a) == file_bytes(final_b));

  std::filesystem::remove(mid);
  std::filesystem::remove(final_a);
  std::filesystem::remove(final_b);
}

TEST_CASE("independent per-task networks survive the round trip", "[checkpoint]") {
  auto tasks = disjoint_tasks(502);
  ContinualLearner learner(small_config(Variant::ONE, 2));
  learner.learn_task(tasks[0]);
  learner.learn_task(tasks[1]);

  const std::string first = temp_path("cat_ckpt_one_a.bin");
  const std::string second = temp_path("cat_ckpt_one_b.bin");
  save_checkpoint(learner, first);
  ContinualLearner loaded = load_checkpoint(first);
  save_checkpoint(loaded, second);

  CHECK(file_bytes(first) == file_bytes(second));
  CHECK(loaded.masks().size() == 0);
  CHECK(loaded.matrix() == learner.matrix());
  for (std::size_t t = 0; t < 2; ++t)
    CHECK(loaded.predict(t, tasks[t].test.x).v == learner.predict(t, tasks[t].test.x).v);

  std::filesystem::remove(first);
  std::filesystem::remove(second);
}

TEST_CASE("an empty learner checkpoints cleanly", "[checkpoint]") {
  const LearnerConfig cfg = small_config(Variant::CAT, 9);
  ContinualLearner fresh(cfg);

  const std::string path = temp_path("cat_ckpt_empty.bin");
  save_checkpoint(fresh, path);
  ContinualLearner loaded = load_checkpoint(path);

  CHECK(loaded.tasks_learned() == 0);
  CHECK(loaded.masks().size() == 0);
  CHECK(loaded.kta_block_count() == 0);
  CHECK_THROWS_AS(loaded.kb(), StateError);

  // the restored generator must continue exactly where a fresh one starts
  auto tasks = twin_tasks(321);
  ContinualLearner reference(cfg);
  reference.learn_task(tasks[0]);
  loaded.learn_task(tasks[0]);
  CHECK(loaded.matrix() == reference.matrix());
  CHECK(loaded.predict(0, tasks[0].test.x).v == reference.predict(0, tasks[0].test.x).v);

  std::filesystem::remove(path);
}

TEST_CASE("damaged files are rejected", "[checkpoint]") {
  SECTION("missing file") {
    CHECK_THROWS_AS(load_checkpoint(temp_path("cat_ckpt_does_not_exist.bin")), FormatError);
  }

  SECTION("wrong magic") {
    const std::string path = temp_path("cat_ckpt_badmagic.bin");
    std::ofstream(path, std::ios::binary) << "NOTACKPTxxxxxxxxxxxx";
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    std::filesystem::remove(path);
  }

  SECTION("truncated body") {
    auto tasks = twin_tasks(905);
    ContinualLearner learner(small_config(Variant::CAT_all_dis, 5));
    learner.learn_task(tasks[0]);
    const std::string whole = temp_path("cat_ckpt_whole.bin");
    save_checkpoint(learner, whole);
    const std::string bytes = file_bytes(whole);

    const std::string cut = temp_path("cat_ckpt_cut.bin");
    std::ofstream(cut, std::ios::binary).write(bytes.data(), std::streamsize(bytes.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(cut), FormatError);

    std::filesystem::remove(whole);
    std::filesystem::remove(cut);
  }
}
