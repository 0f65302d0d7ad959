#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <vf/alpha_ast.hpp>
#include <vf/checkpoint.hpp>
#include <vf/corpus.hpp>
#include <vf/gnn.hpp>

namespace vf {

enum class Optimizer : std::uint8_t { Adam, Sgd };

const char* to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& s);

struct TrainConfig {
  ModelConfig model;
  int epochs = 50;
  int batch_size = 32;
  double lr = 1e-3;
  Optimizer optimizer = Optimizer::Adam;
  std::uint64_t seed = 1;
  int slice_depth = 1;
  bool use_unchanged = true;  // false = changed-statements-only ablation
  int jobs = 0;               // graph building threads; 0 = hardware default

  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Builds one merged annotated graph for a commit: per file, diff the
/// versions, slice each side around its changed lines, match, merge; then
/// join file components under a super-root. A file whose slice is empty on
/// both sides contributes nothing, so an identity commit reduces to the
/// bare super-root. ParseError is rethrown with the file path prepended.
AlphaAst commit_to_graph(const CommitRecord& rec, const TrainConfig& cfg);

struct TrainResult {
  Model model;
  std::vector<double> epoch_loss;  // mean per-sample loss per epoch
  int parse_failures = 0;          // commits skipped
};

/// Trains on the given records: undersample to balance, build graphs
/// (parallel, deterministic), then seeded shuffled mini-batches per epoch.
/// Runs with the same seed, config, and records are bitwise identical.
/// checkpoint_path, when set, is rewritten after every epoch. Throws
/// NonFiniteLoss if the loss leaves the reals.
TrainResult train(const std::vector<CommitRecord>& records, const TrainConfig& cfg,
                  const std::optional<std::string>& checkpoint_path = std::nullopt,
                  CheckpointMeta meta = {},
                  const std::function<void(int, double)>& on_epoch = nullptr);

struct Prediction {
  std::string commit_id;
  double prob = 0.0;
  bool parse_failed = false;
};

/// Scores every commit; a commit whose graph cannot be built is reported
/// with probability 0 and the flag set instead of aborting the batch.
std::vector<Prediction> predict(const Model& model, const TrainConfig& graph_cfg,
                                const std::vector<CommitRecord>& records);

/// Builds graphs for many commits with a thread pool, results indexed like
/// the input; nullopt marks parse failures.
std::vector<std::optional<AlphaAst>> build_graphs(
    const std::vector<CommitRecord>& records, const TrainConfig& cfg);

}  // namespace vf
