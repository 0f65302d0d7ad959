#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include <vf/alpha_ast.hpp>
#include <vf/errors.hpp>
#include <vf/tape.hpp>

namespace vf {

enum class Flavor : std::uint8_t { Gat, Gcn, Gin, Sage };
enum class ReadoutKind : std::uint8_t { Mean, Max };

const char* to_string(Flavor f);
const char* to_string(ReadoutKind r);
Flavor flavor_from_string(const std::string& s);
ReadoutKind readout_from_string(const std::string& s);

struct ModelConfig {
  Flavor flavor = Flavor::Gat;
  int num_layers = 2;
  int hidden = 64;
  int kind_dim = 16;
  int label_dim = 16;
  int ann_dim = 8;
  int label_buckets = 4096;
  ReadoutKind readout = ReadoutKind::Mean;
  std::uint64_t seed = 1;

  int input_dim() const { return kind_dim + label_dim + ann_dim; }
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// One message-passing layer. rel[r] transforms messages arriving over
/// edges annotated r; a node's own contribution uses its node annotation.
/// Only the tensors the flavor reads are allocated.
struct LayerParams {
  std::array<Matrix, kAnnotationCount> rel;  // in x out, all flavors
  Matrix bias;                               // 1 x out (not GIN)
  Matrix attn;                               // 2*out x 1, GAT
  Matrix eps;                                // 1 x 1, GIN
  Matrix gin_w1, gin_b1, gin_w2, gin_b2;     // out x out / 1 x out, GIN
  Matrix sage_proj;                          // (in+out) x out, GraphSAGE
};

struct Model {
  ModelConfig cfg;
  Matrix kind_emb;   // kNodeKindCount x kind_dim
  Matrix label_emb;  // label_buckets x label_dim
  Matrix ann_emb;    // kAnnotationCount x ann_dim
  std::vector<LayerParams> layers;
  Matrix cls_w;  // hidden x 1
  Matrix cls_b;  // 1 x 1

  /// Deterministic initialization from cfg.seed: uniform Xavier for weight
  /// matrices, small uniform for embeddings, zero biases and epsilon.
  static Model init(const ModelConfig& cfg);

  /// All parameter tensors in a fixed order with stable names; the same
  /// order is used by the optimizer, checkpoints, and gradient checks.
  std::vector<std::pair<std::string, Matrix*>> tensors();
  std::vector<std::pair<std::string, const Matrix*>> tensors() const;

  /// Same shapes as this model, all zeros; receives gradients.
  Model zeros_like() const;
};

std::uint64_t fnv1a64(const std::string& s);

/// Graphs flattened for the network: per-node feature table indices and the
/// directed parent-to-child edge list with per-edge annotation ids. Nodes of
/// one graph occupy a contiguous index range, and no edge crosses graphs.
struct GraphBatch {
  std::vector<int> kind_idx;
  std::vector<int> label_bucket;
  std::vector<int> ann_idx;
  std::vector<int> graph_of;

  struct Edge {
    int src = 0;
    int dst = 0;
    int rel = 0;
  };
  std::vector<Edge> edges;
  int num_graphs = 0;

  int num_nodes() const { return static_cast<int>(kind_idx.size()); }

  static GraphBatch from_graphs(const std::vector<const AlphaAst*>& graphs,
                                const ModelConfig& cfg);
};

/// Node feature rows: concat of kind, hashed-label, and annotation
/// embeddings, in batch node order.
Matrix featurize(const GraphBatch& batch, const Model& model);

/// Per-graph fix probabilities in [0, 1].
Vector forward(const GraphBatch& batch, const Model& model);

/// Mean binary cross-entropy over the batch and its gradient with respect
/// to every model tensor, via one reverse sweep.
std::pair<Scalar, Model> loss_and_gradients(const GraphBatch& batch,
                                            const Model& model,
                                            const Vector& labels);

}  // namespace vf
