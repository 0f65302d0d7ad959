#include <vf/gnn.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace vf {

const char* to_string(Flavor f) {
  switch (f) {
    case Flavor::Gat: return "gat";
    case Flavor::Gcn: return "gcn";
    case Flavor::Gin: return "gin";
    case Flavor::Sage: return "sage";
  }
  return "?";
}

const char* to_string(ReadoutKind r) {
  return r == ReadoutKind::Mean ? "mean" : "max";
}

Flavor flavor_from_string(const std::string& s) {
  if (s == "gat") return Flavor::Gat;
  if (s == "gcn") return Flavor::Gcn;
  if (s == "gin") return Flavor::Gin;
  if (s == "sage") return Flavor::Sage;
  throw std::invalid_argument("unknown flavor: " + s);
}

ReadoutKind readout_from_string(const std::string& s) {
  if (s == "mean") return ReadoutKind::Mean;
  if (s == "max") return ReadoutKind::Max;
  throw std::invalid_argument("unknown readout: " + s);
}

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"flavor", to_string(cfg.flavor)},
          {"num_layers", cfg.num_layers},
          {"hidden", cfg.hidden},
          {"kind_dim", cfg.kind_dim},
          {"label_dim", cfg.label_dim},
          {"ann_dim", cfg.ann_dim},
          {"label_buckets", cfg.label_buckets},
          {"readout", to_string(cfg.readout)},
          {"seed", cfg.seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  auto str = [&](const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) throw SchemaError("must be a string", 0, key);
    return j.at(key).get<std::string>();
  };
  auto num = [&](const char* key, std::int64_t fallback, std::int64_t lo) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw SchemaError("must be an integer", 0, key);
    std::int64_t v = j.at(key).get<std::int64_t>();
    if (v < lo) throw SchemaError("must be at least " + std::to_string(lo), 0, key);
    return v;
  };
  try {
    cfg.flavor = flavor_from_string(str("flavor", to_string(cfg.flavor)));
    cfg.readout = readout_from_string(str("readout", to_string(cfg.readout)));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what(), 0, "flavor/readout");
  }
  cfg.num_layers = static_cast<int>(num("num_layers", cfg.num_layers, 1));
  cfg.hidden = static_cast<int>(num("hidden", cfg.hidden, 1));
  cfg.kind_dim = static_cast<int>(num("kind_dim", cfg.kind_dim, 1));
  cfg.label_dim = static_cast<int>(num("label_dim", cfg.label_dim, 1));
  cfg.ann_dim = static_cast<int>(num("ann_dim", cfg.ann_dim, 1));
  cfg.label_buckets = static_cast<int>(num("label_buckets", cfg.label_buckets, 1));
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) throw SchemaError("must be an integer", 0, "seed");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  return cfg;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// --- model -----------------------------------------------------------------

namespace {

bool uses_bias(Flavor f) { return f != Flavor::Gin; }

void allocate(Model& m) {
  const ModelConfig& cfg = m.cfg;
  m.kind_emb = Matrix::Zero(kNodeKindCount, cfg.kind_dim);
  m.label_emb = Matrix::Zero(cfg.label_buckets, cfg.label_dim);
  m.ann_emb = Matrix::Zero(kAnnotationCount, cfg.ann_dim);
  m.layers.resize(static_cast<std::size_t>(cfg.num_layers));
  for (int l = 0; l < cfg.num_layers; ++l) {
    int in = l == 0 ? cfg.input_dim() : cfg.hidden;
    int out = cfg.hidden;
    LayerParams& p = m.layers[static_cast<std::size_t>(l)];
    for (int r = 0; r < kAnnotationCount; ++r) p.rel[static_cast<std::size_t>(r)] = Matrix::Zero(in, out);
    if (uses_bias(cfg.flavor)) p.bias = Matrix::Zero(1, out);
    if (cfg.flavor == Flavor::Gat) p.attn = Matrix::Zero(2 * out, 1);
    if (cfg.flavor == Flavor::Gin) {
      p.eps = Matrix::Zero(1, 1);
      p.gin_w1 = Matrix::Zero(out, out);
      p.gin_b1 = Matrix::Zero(1, out);
      p.gin_w2 = Matrix::Zero(out, out);
      p.gin_b2 = Matrix::Zero(1, out);
    }
    if (cfg.flavor == Flavor::Sage) p.sage_proj = Matrix::Zero(in + out, out);
  }
  m.cls_w = Matrix::Zero(cfg.hidden, 1);
  m.cls_b = Matrix::Zero(1, 1);
}

enum class Init { Embedding, Xavier, Zero };

Init init_kind(const std::string& name) {
  if (name.find("emb") != std::string::npos) return Init::Embedding;
  if (name.find("bias") != std::string::npos) return Init::Zero;
  if (name.find("eps") != std::string::npos) return Init::Zero;
  if (name.find("_b") != std::string::npos) return Init::Zero;  // gin_b1, gin_b2, cls_b
  return Init::Xavier;
}

}  // namespace

std::vector<std::pair<std::string, Matrix*>> Model::tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  out.emplace_back("kind_emb", &kind_emb);
  out.emplace_back("label_emb", &label_emb);
  out.emplace_back("ann_emb", &ann_emb);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::string prefix = "layer" + std::to_string(l) + ".";
    LayerParams& p = layers[l];
    for (int r = 0; r < kAnnotationCount; ++r)
      out.emplace_back(prefix + "rel" + std::to_string(r), &p.rel[static_cast<std::size_t>(r)]);
    auto maybe = [&](const char* name, Matrix& m) {
      if (m.size() > 0) out.emplace_back(prefix + name, &m);
    };
    maybe("bias", p.bias);
    maybe("attn", p.attn);
    maybe("eps", p.eps);
    maybe("gin_w1", p.gin_w1);
    maybe("gin_b1", p.gin_b1);
    maybe("gin_w2", p.gin_w2);
    maybe("gin_b2", p.gin_b2);
    maybe("sage_proj", p.sage_proj);
  }
  out.emplace_back("cls_w", &cls_w);
  out.emplace_back("cls_b", &cls_b);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> Model::tensors() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (auto& [name, ptr] : const_cast<Model*>(this)->tensors()) out.emplace_back(name, ptr);
  return out;
}

Model Model::init(const ModelConfig& cfg) {
  Model m;
  m.cfg = cfg;
  allocate(m);
  std::mt19937_64 rng(cfg.seed);
  // portable uniform in [0, 1): top 53 bits of the engine output
  auto unit = [&rng]() {
    return static_cast<Scalar>(rng() >> 11) * 0x1.0p-53;
  };
  for (auto& [name, mat] : m.tensors()) {
    Init kind = init_kind(name);
    if (kind == Init::Zero) continue;  // already zero, draws nothing
    Scalar bound;
    if (kind == Init::Embedding) {
      bound = 0.1;
    } else {
      Scalar fan_in = static_cast<Scalar>(mat->rows());
      Scalar fan_out = static_cast<Scalar>(mat->cols());
      bound = std::sqrt(6.0 / (fan_in + fan_out));
    }
    for (Eigen::Index r = 0; r < mat->rows(); ++r)
      for (Eigen::Index c = 0; c < mat->cols(); ++c)
        (*mat)(r, c) = (2.0 * unit() - 1.0) * bound;
  }
  return m;
}

Model Model::zeros_like() const {
  Model z = *this;
  for (auto& [name, mat] : z.tensors()) mat->setZero();
  return z;
}

// --- batching ----------------------------------------------------------------

GraphBatch GraphBatch::from_graphs(const std::vector<const AlphaAst*>& graphs,
                                   const ModelConfig& cfg) {
  GraphBatch b;
  b.num_graphs = static_cast<int>(graphs.size());
  int offset = 0;
  for (int g = 0; g < b.num_graphs; ++g) {
    const AlphaAst& alpha = *graphs[static_cast<std::size_t>(g)];
    for (const AlphaNode& n : alpha.nodes) {
      b.kind_idx.push_back(static_cast<int>(n.kind));
      b.label_bucket.push_back(
          static_cast<int>(fnv1a64(n.label) % static_cast<std::uint64_t>(cfg.label_buckets)));
      b.ann_idx.push_back(static_cast<int>(n.ann));
      b.graph_of.push_back(g);
    }
    for (const AlphaEdge& e : alpha.edges)
      b.edges.push_back({e.parent + offset, e.child + offset, static_cast<int>(e.ann)});
    offset += static_cast<int>(alpha.nodes.size());
  }
  return b;
}

Matrix featurize(const GraphBatch& batch, const Model& model) {
  int n = batch.num_nodes();
  const ModelConfig& cfg = model.cfg;
  Matrix h(n, cfg.input_dim());
  for (int i = 0; i < n; ++i) {
    h.block(i, 0, 1, cfg.kind_dim) = model.kind_emb.row(batch.kind_idx[static_cast<std::size_t>(i)]);
    h.block(i, cfg.kind_dim, 1, cfg.label_dim) =
        model.label_emb.row(batch.label_bucket[static_cast<std::size_t>(i)]);
    h.block(i, cfg.kind_dim + cfg.label_dim, 1, cfg.ann_dim) =
        model.ann_emb.row(batch.ann_idx[static_cast<std::size_t>(i)]);
  }
  return h;
}

// --- forward graph ------------------------------------------------------------

namespace {

struct Built {
  ad::Tape tape;
  std::vector<std::pair<std::string, int>> param_slots;  // tensors() order
  int logits = -1;  // num_graphs x 1
  int probs = -1;
};

/// Edge endpoints regrouped by relation, remembering each edge's position in
/// the combined list so per-relation results can be scattered back.
struct RelGroup {
  std::vector<int> src, dst, pos;
};

int sum_slots(ad::Tape& t, const std::vector<int>& slots, int rows, int cols) {
  if (slots.empty()) return t.input(Matrix::Zero(rows, cols));
  int acc = slots[0];
  for (std::size_t i = 1; i < slots.size(); ++i) acc = t.add(acc, slots[i]);
  return acc;
}

Built build_forward(const GraphBatch& batch, const Model& model) {
  const ModelConfig& cfg = model.cfg;
  Built b;
  ad::Tape& t = b.tape;

  std::map<std::string, int> slot;
  for (const auto& [name, mat] : model.tensors()) {
    int s = t.param(*mat);
    slot[name] = s;
    b.param_slots.emplace_back(name, s);
  }

  int n = batch.num_nodes();

  // node features: kind, hashed label, annotation embeddings side by side
  int h = t.concat_cols(t.concat_cols(t.gather_rows(slot["kind_emb"], batch.kind_idx),
                                      t.gather_rows(slot["label_emb"], batch.label_bucket)),
                        t.gather_rows(slot["ann_emb"], batch.ann_idx));

  // shared edge bookkeeping
  std::vector<int> in_deg(static_cast<std::size_t>(n), 0);
  for (const GraphBatch::Edge& e : batch.edges) ++in_deg[static_cast<std::size_t>(e.dst)];

  std::array<RelGroup, kAnnotationCount> real;
  for (std::size_t i = 0; i < batch.edges.size(); ++i) {
    const GraphBatch::Edge& e = batch.edges[i];
    auto& g = real[static_cast<std::size_t>(e.rel)];
    g.src.push_back(e.src);
    g.dst.push_back(e.dst);
    g.pos.push_back(static_cast<int>(i));
  }
  // nodes grouped by their annotation, for self contributions
  std::array<std::vector<int>, kAnnotationCount> by_ann;
  for (int i = 0; i < n; ++i)
    by_ann[static_cast<std::size_t>(batch.ann_idx[static_cast<std::size_t>(i)])].push_back(i);

  for (int l = 0; l < cfg.num_layers; ++l) {
    std::string prefix = "layer" + std::to_string(l) + ".";
    int out_dim = cfg.hidden;
    std::array<int, kAnnotationCount> rel_w;
    for (int r = 0; r < kAnnotationCount; ++r)
      rel_w[static_cast<std::size_t>(r)] = slot[prefix + "rel" + std::to_string(r)];

    // transformed self contribution, h_i * W_{ann(i)}, used by several flavors
    auto self_transformed = [&]() {
      std::vector<int> parts;
      for (int r = 0; r < kAnnotationCount; ++r) {
        const auto& nodes = by_ann[static_cast<std::size_t>(r)];
        if (nodes.empty()) continue;
        int msg = t.matmul(t.gather_rows(h, nodes), rel_w[static_cast<std::size_t>(r)]);
        parts.push_back(t.scatter_sum(msg, nodes, n));
      }
      return sum_slots(t, parts, n, out_dim);
    };

    int next = -1;
    switch (cfg.flavor) {
      case Flavor::Gat: {
        // combined edge list: the real edges, then one self loop per node
        // whose relation is the node's own annotation
        int n_edges = static_cast<int>(batch.edges.size()) + n;
        std::vector<int> comb_dst(static_cast<std::size_t>(n_edges));
        for (std::size_t i = 0; i < batch.edges.size(); ++i)
          comb_dst[i] = batch.edges[i].dst;
        for (int i = 0; i < n; ++i)
          comb_dst[batch.edges.size() + static_cast<std::size_t>(i)] = i;

        std::vector<int> u_parts, v_parts;
        for (int r = 0; r < kAnnotationCount; ++r) {
          RelGroup g = real[static_cast<std::size_t>(r)];
          for (int i : by_ann[static_cast<std::size_t>(r)]) {
            g.src.push_back(i);
            g.dst.push_back(i);
            g.pos.push_back(static_cast<int>(batch.edges.size()) + i);
          }
          if (g.src.empty()) continue;
          int w = rel_w[static_cast<std::size_t>(r)];
          int u = t.matmul(t.gather_rows(h, g.src), w);  // source messages
          int v = t.matmul(t.gather_rows(h, g.dst), w);  // target view
          u_parts.push_back(t.scatter_sum(u, g.pos, n_edges));
          v_parts.push_back(t.scatter_sum(v, g.pos, n_edges));
        }
        int u = sum_slots(t, u_parts, n_edges, out_dim);
        int v = sum_slots(t, v_parts, n_edges, out_dim);
        int logits = t.leaky_relu(t.matmul(t.concat_cols(v, u), slot[prefix + "attn"]), 0.2);
        int alpha = t.segment_softmax(logits, comb_dst, n);
        int agg = t.scatter_sum(t.rowwise_mul(alpha, u), comb_dst, n);
        next = t.relu(t.add_row(agg, slot[prefix + "bias"]));
        break;
      }
      case Flavor::Gcn: {
        // symmetric normalization over the self-looped graph
        auto deg = [&](int i) { return static_cast<Scalar>(1 + in_deg[static_cast<std::size_t>(i)]); };
        std::vector<int> parts;
        for (int r = 0; r < kAnnotationCount; ++r) {
          const RelGroup& g = real[static_cast<std::size_t>(r)];
          if (!g.src.empty()) {
            Vector coeff(static_cast<Eigen::Index>(g.src.size()));
            for (std::size_t i = 0; i < g.src.size(); ++i)
              coeff(static_cast<Eigen::Index>(i)) = 1.0 / std::sqrt(deg(g.src[i]) * deg(g.dst[i]));
            int msg = t.matmul(t.gather_rows(h, g.src), rel_w[static_cast<std::size_t>(r)]);
            parts.push_back(t.scatter_sum(t.rowwise_scale(msg, coeff), g.dst, n));
          }
          const auto& nodes = by_ann[static_cast<std::size_t>(r)];
          if (!nodes.empty()) {
            Vector coeff(static_cast<Eigen::Index>(nodes.size()));
            for (std::size_t i = 0; i < nodes.size(); ++i)
              coeff(static_cast<Eigen::Index>(i)) = 1.0 / deg(nodes[i]);
            int msg = t.matmul(t.gather_rows(h, nodes), rel_w[static_cast<std::size_t>(r)]);
            parts.push_back(t.scatter_sum(t.rowwise_scale(msg, coeff), nodes, n));
          }
        }
        int agg = sum_slots(t, parts, n, out_dim);
        next = t.relu(t.add_row(agg, slot[prefix + "bias"]));
        break;
      }
      case Flavor::Gin: {
        std::vector<int> parts;
        for (int r = 0; r < kAnnotationCount; ++r) {
          const RelGroup& g = real[static_cast<std::size_t>(r)];
          if (g.src.empty()) continue;
          int msg = t.matmul(t.gather_rows(h, g.src), rel_w[static_cast<std::size_t>(r)]);
          parts.push_back(t.scatter_sum(msg, g.dst, n));
        }
        int agg = sum_slots(t, parts, n, out_dim);
        int one = t.input(Matrix::Ones(1, 1));
        int one_plus_eps = t.add(slot[prefix + "eps"], one);
        int z = t.add(t.scale_by(self_transformed(), one_plus_eps), agg);
        int hid = t.relu(t.add_row(t.matmul(z, slot[prefix + "gin_w1"]), slot[prefix + "gin_b1"]));
        next = t.relu(t.add_row(t.matmul(hid, slot[prefix + "gin_w2"]), slot[prefix + "gin_b2"]));
        break;
      }
      case Flavor::Sage: {
        std::vector<int> parts;
        for (int r = 0; r < kAnnotationCount; ++r) {
          const RelGroup& g = real[static_cast<std::size_t>(r)];
          if (g.src.empty()) continue;
          int msg = t.matmul(t.gather_rows(h, g.src), rel_w[static_cast<std::size_t>(r)]);
          parts.push_back(t.scatter_sum(msg, g.dst, n));
        }
        int agg = sum_slots(t, parts, n, out_dim);
        Vector recip(n);
        for (int i = 0; i < n; ++i) {
          int d = in_deg[static_cast<std::size_t>(i)];
          recip(i) = d > 0 ? 1.0 / static_cast<Scalar>(d) : 0.0;
        }
        int nbr = t.rowwise_scale(agg, recip);  // mean over incoming, zero if none
        int cat = t.concat_cols(h, nbr);
        next = t.relu(t.add_row(t.matmul(cat, slot[prefix + "sage_proj"]), slot[prefix + "bias"]));
        break;
      }
    }
    h = next;
  }

  // readout over graphs
  int pooled;
  if (cfg.readout == ReadoutKind::Mean) {
    std::vector<int> counts(static_cast<std::size_t>(batch.num_graphs), 0);
    for (int g : batch.graph_of) ++counts[static_cast<std::size_t>(g)];
    Vector recip(batch.num_graphs);
    for (int g = 0; g < batch.num_graphs; ++g) {
      int c = counts[static_cast<std::size_t>(g)];
      recip(g) = c > 0 ? 1.0 / static_cast<Scalar>(c) : 0.0;
    }
    pooled = t.rowwise_scale(t.scatter_sum(h, batch.graph_of, batch.num_graphs), recip);
  } else {
    pooled = t.segment_max(h, batch.graph_of, batch.num_graphs);
  }

  b.logits = t.add_row(t.matmul(pooled, slot["cls_w"]), slot["cls_b"]);
  b.probs = t.sigmoid(b.logits);
  return b;
}

}  // namespace

Vector forward(const GraphBatch& batch, const Model& model) {
  Built b = build_forward(batch, model);
  return b.tape.value(b.probs).col(0);
}

std::pair<Scalar, Model> loss_and_gradients(const GraphBatch& batch, const Model& model,
                                            const Vector& labels) {
  if (labels.rows() != batch.num_graphs)
    throw ShapeMismatch("labels length differs from batch graph count");
  Built b = build_forward(batch, model);
  int loss = b.tape.bce_with_logits(b.logits, labels);
  b.tape.backward(loss);

  Model grads = model.zeros_like();
  auto dst = grads.tensors();
  for (std::size_t i = 0; i < dst.size(); ++i)
    *dst[i].second = b.tape.grad(b.param_slots[i].second);
  return {b.tape.value(loss)(0, 0), grads};
}

}  // namespace vf
