// Checkpoint persistence, commit-to-graph assembly, training orchestration.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <vf/checkpoint.hpp>
#include <vf/corpus.hpp>
#include <vf/errors.hpp>
#include <vf/gnn.hpp>
#include <vf/synthetic.hpp>
#include <vf/trainer.hpp>

#include "helpers.hpp"

using namespace vf;

namespace {

std::string temp_path(const std::string& stem) {
  static int counter = 0;
  return "tmp_train_" + stem + "_" + std::to_string(counter++) + ".bin";
}

TrainConfig small_train_config() {
  TrainConfig cfg;
  cfg.model.flavor = Flavor::Gat;
  cfg.model.num_layers = 2;
  cfg.model.hidden = 8;
  cfg.model.kind_dim = 4;
  cfg.model.label_dim = 4;
  cfg.model.ann_dim = 2;
  cfg.model.label_buckets = 64;
  cfg.model.seed = 3;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = 3;
  cfg.jobs = 1;
  return cfg;
}

CommitRecord buffer_fix_record() {
  CommitRecord rec;
  rec.commit_id = "fig";
  rec.timestamp = 1000;
  rec.is_fix = true;
  rec.files.push_back({"src/copy.c", fixtures::kBufBefore, fixtures::kBufAfter});
  rec.changed_loc = count_changed_loc(rec);
  return rec;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

bool models_identical(const Model& a, const Model& b) {
  auto ta = a.tensors();
  auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].first != tb[i].first) return false;
    const Matrix& ma = *ta[i].second;
    const Matrix& mb = *tb[i].second;
    if (ma.rows() != mb.rows() || ma.cols() != mb.cols()) return false;
    for (Eigen::Index r = 0; r < ma.rows(); ++r)
      for (Eigen::Index c = 0; c < ma.cols(); ++c)
        if (ma(r, c) != mb(r, c)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("checkpoint round-trips model and metadata bitwise") {
  ModelConfig cfg;
  cfg.flavor = Flavor::Gin;
  cfg.num_layers = 3;
  cfg.hidden = 10;
  cfg.kind_dim = 5;
  cfg.label_dim = 6;
  cfg.ann_dim = 3;
  cfg.label_buckets = 33;
  cfg.readout = ReadoutKind::Max;
  cfg.seed = 17;
  Model m = Model::init(cfg);

  CheckpointMeta meta;
  meta.slice_depth = 2;
  meta.use_unchanged = false;
  meta.cut_timestamp = 123456789;

  std::string path = temp_path("roundtrip");
  save_checkpoint(path, m, meta);
  Checkpoint back = load_checkpoint(path);

  CHECK(back.meta.slice_depth == 2);
  CHECK(back.meta.use_unchanged == false);
  CHECK(back.meta.cut_timestamp == 123456789);
  CHECK(back.model.cfg.flavor == Flavor::Gin);
  CHECK(back.model.cfg.num_layers == 3);
  CHECK(back.model.cfg.hidden == 10);
  CHECK(back.model.cfg.readout == ReadoutKind::Max);
  CHECK(back.model.cfg.seed == 17);
  CHECK(models_identical(m, back.model));

  // saving the loaded model reproduces the file byte for byte
  std::string path2 = temp_path("resave");
  save_checkpoint(path2, back.model, back.meta);
  CHECK(read_bytes(path) == read_bytes(path2));
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("checkpoint loader rejects damaged files") {
  ModelConfig cfg;
  cfg.hidden = 4;
  cfg.kind_dim = 2;
  cfg.label_dim = 2;
  cfg.ann_dim = 2;
  cfg.label_buckets = 8;
  Model m = Model::init(cfg);
  std::string path = temp_path("damage");
  save_checkpoint(path, m, {});

  SUBCASE("wrong magic") {
    std::string bytes = read_bytes(path);
    bytes[0] = 'X';
    std::ofstream out(path, std::ios::binary);
    out << bytes;
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
  }
  SUBCASE("truncated payload") {
    std::string bytes = read_bytes(path);
    std::ofstream out(path, std::ios::binary);
    out << bytes.substr(0, bytes.size() - 16);
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint("no_such_dir/no_such_file.bin"), IoError);
  }
  std::remove(path.c_str());
}

TEST_CASE("commit_to_graph merges per-file graphs under a super-root") {
  TrainConfig cfg = small_train_config();
  cfg.slice_depth = 1;
  cfg.use_unchanged = true;

  CommitRecord rec = buffer_fix_record();
  AlphaAst g = commit_to_graph(rec, cfg);

  // single file: one component plus the super-root and its edge
  REQUIRE(g.roots.size() == 1);
  const AlphaNode& root = g.nodes[static_cast<std::size_t>(g.roots[0])];
  CHECK(root.kind == NodeKind::SuperRoot);
  CHECK(root.ann == Annotation::Unchanged);

  int deleted_nodes = 0, added_nodes = 0;
  for (const AlphaNode& n : g.nodes) {
    if (n.ann == Annotation::Deleted) ++deleted_nodes;
    if (n.ann == Annotation::Added) ++added_nodes;
  }
  CHECK(deleted_nodes == 3);
  CHECK(added_nodes == 1);

  // two-file commit: both components hang off one super-root
  rec.files.push_back({"src/other.c", fixtures::kBufBefore, fixtures::kBufAfter});
  rec.changed_loc = count_changed_loc(rec);
  AlphaAst g2 = commit_to_graph(rec, cfg);
  CHECK(g2.nodes.size() == 2 * (g.nodes.size() - 1) + 1);
  int super_children = 0;
  for (const AlphaEdge& e : g2.edges)
    if (e.parent == g2.roots[0]) ++super_children;
  CHECK(super_children == 2);
}

TEST_CASE("identity commits reduce to the bare super-root") {
  TrainConfig cfg = small_train_config();
  CommitRecord rec;
  rec.commit_id = "noop";
  rec.timestamp = 1;
  rec.files.push_back({"a.c", fixtures::kBufBefore, fixtures::kBufBefore});
  rec.changed_loc = 0;
  AlphaAst g = commit_to_graph(rec, cfg);
  CHECK(g.nodes.size() == 1);
  CHECK(g.edges.empty());
  CHECK(g.nodes[0].kind == NodeKind::SuperRoot);
}

TEST_CASE("dropping unchanged context shrinks the graph") {
  TrainConfig full = small_train_config();
  full.slice_depth = 1;
  full.use_unchanged = true;
  TrainConfig ablated = full;
  ablated.use_unchanged = false;

  CommitRecord rec = buffer_fix_record();
  AlphaAst with_ctx = commit_to_graph(rec, full);
  AlphaAst without_ctx = commit_to_graph(rec, ablated);
  CHECK(without_ctx.nodes.size() < with_ctx.nodes.size());
  CHECK(!without_ctx.nodes.empty());
}

TEST_CASE("commit_to_graph reports the failing file") {
  TrainConfig cfg = small_train_config();
  CommitRecord rec;
  rec.commit_id = "bad";
  rec.timestamp = 1;
  rec.files.push_back({"src/broken.c", "int x = ;\n", "int x = 1;\n"});
  rec.changed_loc = 2;
  try {
    commit_to_graph(rec, cfg);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("src/broken.c") != std::string::npos);
  }
}

TEST_CASE("training runs, checkpoints, and repeats bitwise") {
  std::vector<CommitRecord> corpus = gen_synthetic(24, 24, 5);
  TrainConfig cfg = small_train_config();

  std::string ck1 = temp_path("run1");
  CheckpointMeta meta;
  meta.cut_timestamp = 777;
  std::vector<std::pair<int, double>> epochs_seen;
  TrainResult r1 = train(corpus, cfg, ck1, meta, [&](int epoch, double loss) {
    epochs_seen.emplace_back(epoch, loss);
  });

  REQUIRE(r1.epoch_loss.size() == 2);
  CHECK(r1.parse_failures == 0);
  for (double l : r1.epoch_loss) {
    CHECK(std::isfinite(l));
    CHECK(l > 0.0);
  }
  REQUIRE(epochs_seen.size() == 2);
  CHECK(epochs_seen[0].first == 0);
  CHECK(epochs_seen[1].first == 1);
  CHECK(epochs_seen[0].second == r1.epoch_loss[0]);
  CHECK(epochs_seen[1].second == r1.epoch_loss[1]);

  Checkpoint saved = load_checkpoint(ck1);
  CHECK(saved.meta.cut_timestamp == 777);
  CHECK(saved.meta.slice_depth == cfg.slice_depth);
  CHECK(saved.meta.use_unchanged == cfg.use_unchanged);
  CHECK(models_identical(saved.model, r1.model));

  // identical seed and data: identical losses, identical checkpoint bytes
  std::string ck2 = temp_path("run2");
  TrainResult r2 = train(corpus, cfg, ck2, meta);
  CHECK(r1.epoch_loss == r2.epoch_loss);
  CHECK(models_identical(r1.model, r2.model));
  CHECK(read_bytes(ck1) == read_bytes(ck2));

  // a different seed moves the parameters
  TrainConfig other = cfg;
  other.seed = 99;
  other.model.seed = 99;
  TrainResult r3 = train(corpus, other);
  CHECK(!models_identical(r1.model, r3.model));

  std::remove(ck1.c_str());
  std::remove(ck2.c_str());
}

TEST_CASE("training requires both labels") {
  std::vector<CommitRecord> corpus = gen_synthetic(6, 6, 8);
  std::vector<CommitRecord> only_fixes;
  for (const CommitRecord& r : corpus)
    if (r.is_fix) only_fixes.push_back(r);
  CHECK_THROWS_AS(train(only_fixes, small_train_config()), DegenerateSplit);
  CHECK_THROWS_AS(train({}, small_train_config()), DegenerateSplit);
}

TEST_CASE("predict scores every commit and flags parse failures") {
  std::vector<CommitRecord> corpus = gen_synthetic(10, 10, 9);
  TrainConfig cfg = small_train_config();
  TrainResult r = train(corpus, cfg);

  CommitRecord broken;
  broken.commit_id = "broken";
  broken.timestamp = 1;
  broken.files.push_back({"b.c", "int x = ;\n", "int y = ;\n"});
  broken.changed_loc = 2;
  std::vector<CommitRecord> eval_set = corpus;
  eval_set.push_back(broken);

  std::vector<Prediction> preds = predict(r.model, cfg, eval_set);
  REQUIRE(preds.size() == eval_set.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(preds[i].commit_id == eval_set[i].commit_id);
    if (preds[i].parse_failed) {
      CHECK(preds[i].prob == 0.0);
    } else {
      CHECK(preds[i].prob >= 0.0);
      CHECK(preds[i].prob <= 1.0);
    }
  }
  CHECK(preds.back().parse_failed);
  int failed = 0;
  for (const Prediction& p : preds)
    if (p.parse_failed) ++failed;
  CHECK(failed == 1);

  // prediction is deterministic
  std::vector<Prediction> again = predict(r.model, cfg, eval_set);
  for (std::size_t i = 0; i < preds.size(); ++i)
    CHECK(preds[i].prob == again[i].prob);
}

TEST_CASE("train config round-trips through JSON") {
  TrainConfig cfg = small_train_config();
  cfg.optimizer = Optimizer::Sgd;
  cfg.lr = 0.02;
  cfg.slice_depth = 3;
  cfg.use_unchanged = false;
  cfg.model.flavor = Flavor::Sage;
  nlohmann::json j = to_json(cfg);
  TrainConfig back = train_config_from_json(j);
  CHECK(back == cfg);

  nlohmann::json bad = j;
  bad["optimizer"] = "rmsprop";
  CHECK_THROWS_AS(train_config_from_json(bad), SchemaError);
}
