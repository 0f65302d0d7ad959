#include <vf/trainer.hpp>

#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include <vf/diff.hpp>
#include <vf/parser.hpp>
#include <vf/slicer.hpp>

namespace vf {

const char* to_string(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "adam") return Optimizer::Adam;
  if (s == "sgd") return Optimizer::Sgd;
  throw std::invalid_argument("unknown optimizer: " + s);
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"model", to_json(cfg.model)},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"lr", cfg.lr},
          {"optimizer", to_string(cfg.optimizer)},
          {"seed", cfg.seed},
          {"slice_depth", cfg.slice_depth},
          {"use_unchanged", cfg.use_unchanged},
          {"jobs", cfg.jobs}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  if (!j.is_object()) throw SchemaError("config must be an object", 0, "");
  if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
  auto num = [&](const char* key, std::int64_t fallback, std::int64_t lo) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw SchemaError("must be an integer", 0, key);
    std::int64_t v = j.at(key).get<std::int64_t>();
    if (v < lo) throw SchemaError("must be at least " + std::to_string(lo), 0, key);
    return v;
  };
  cfg.epochs = static_cast<int>(num("epochs", cfg.epochs, 1));
  cfg.batch_size = static_cast<int>(num("batch_size", cfg.batch_size, 1));
  cfg.slice_depth = static_cast<int>(num("slice_depth", cfg.slice_depth, 0));
  cfg.jobs = static_cast<int>(num("jobs", cfg.jobs, 0));
  if (j.contains("lr")) {
    if (!j.at("lr").is_number()) throw SchemaError("must be a number", 0, "lr");
    cfg.lr = j.at("lr").get<double>();
    if (cfg.lr < 0) throw SchemaError("must be non-negative", 0, "lr");
  }
  if (j.contains("optimizer")) {
    if (!j.at("optimizer").is_string()) throw SchemaError("must be a string", 0, "optimizer");
    try {
      cfg.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw SchemaError(e.what(), 0, "optimizer");
    }
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) throw SchemaError("must be an integer", 0, "seed");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("use_unchanged")) {
    if (!j.at("use_unchanged").is_boolean())
      throw SchemaError("must be a boolean", 0, "use_unchanged");
    cfg.use_unchanged = j.at("use_unchanged").get<bool>();
  }
  return cfg;
}

AlphaAst commit_to_graph(const CommitRecord& rec, const TrainConfig& cfg) {
  std::vector<AlphaAst> components;
  int depth = cfg.use_unchanged ? cfg.slice_depth : 0;
  for (const CommitFile& f : rec.files) {
    Ast before, after;
    try {
      before = parse_source(f.before, VersionTag::Before);
      after = parse_source(f.after, VersionTag::After);
    } catch (const ParseError& e) {
      throw ParseError::in_file(f.path, e);
    }
    LineDiff diff = diff_lines(f.before, f.after);
    Ast sliced_before = slice_to_ast(before, slice(before, diff.deleted, depth));
    Ast sliced_after = slice_to_ast(after, slice(after, diff.added, depth));
    if (sliced_before.empty() && sliced_after.empty()) continue;
    NodeMatching m = match_asts(sliced_before, sliced_after, diff);
    components.push_back(build_alpha_ast(sliced_before, sliced_after, m));
  }
  return merge_under_super_root(components);
}

std::vector<std::optional<AlphaAst>> build_graphs(
    const std::vector<CommitRecord>& records, const TrainConfig& cfg) {
  std::vector<std::optional<AlphaAst>> out(records.size());
  std::size_t jobs = cfg.jobs > 0
                         ? static_cast<std::size_t>(cfg.jobs)
                         : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  jobs = std::min(jobs, std::max<std::size_t>(records.size(), 1));

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= records.size()) return;
      try {
        out[i] = commit_to_graph(records[i], cfg);
      } catch (const ParseError&) {
        out[i] = std::nullopt;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t + 1 < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

namespace {

void apply_sgd(Model& model, const Model& grads, double lr) {
  auto p = model.tensors();
  auto g = grads.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) *p[i].second -= lr * (*g[i].second);
}

struct AdamState {
  Model m, v;
  int t = 0;
};

void apply_adam(Model& model, const Model& grads, AdamState& st, double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ++st.t;
  double c1 = 1.0 - std::pow(b1, st.t);
  double c2 = 1.0 - std::pow(b2, st.t);
  auto p = model.tensors();
  auto g = grads.tensors();
  auto ms = st.m.tensors();
  auto vs = st.v.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    Matrix& M = *ms[i].second;
    Matrix& V = *vs[i].second;
    const Matrix& G = *g[i].second;
    M = b1 * M + (1.0 - b1) * G;
    V = b2 * V + (1.0 - b2) * G.cwiseProduct(G);
    Matrix mhat = M / c1;
    Matrix vhat = V / c2;
    p[i].second->array() -= lr * mhat.array() / (vhat.array().sqrt() + eps);
  }
}

}  // namespace

TrainResult train(const std::vector<CommitRecord>& records, const TrainConfig& cfg,
                  const std::optional<std::string>& checkpoint_path, CheckpointMeta meta,
                  const std::function<void(int, double)>& on_epoch) {
  std::vector<CommitRecord> balanced = undersample(records, cfg.seed);
  std::vector<std::optional<AlphaAst>> built = build_graphs(balanced, cfg);

  TrainResult result;
  std::vector<AlphaAst> graphs;
  std::vector<double> labels;
  for (std::size_t i = 0; i < built.size(); ++i) {
    if (!built[i].has_value()) {
      ++result.parse_failures;
      continue;
    }
    graphs.push_back(std::move(*built[i]));
    labels.push_back(balanced[i].is_fix ? 1.0 : 0.0);
  }
  bool has_fix = false, has_nonfix = false;
  for (double y : labels) (y > 0.5 ? has_fix : has_nonfix) = true;
  if (!has_fix || !has_nonfix)
    throw DegenerateSplit("training needs both fix and non-fix commits");

  Model model = Model::init(cfg.model);
  AdamState adam{model.zeros_like(), model.zeros_like(), 0};

  std::size_t n = graphs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 shuffle_rng(cfg.seed);

  meta.slice_depth = cfg.slice_depth;
  meta.use_unchanged = cfg.use_unchanged;

  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      std::size_t j = i + shuffle_rng() % (n - i);
      std::swap(order[i], order[j]);
    }
    double epoch_sum = 0.0;
    std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0; start < n; start += bs) {
      std::size_t end = std::min(n, start + bs);
      std::vector<const AlphaAst*> ptrs;
      Vector y(static_cast<Eigen::Index>(end - start));
      for (std::size_t k = start; k < end; ++k) {
        ptrs.push_back(&graphs[order[k]]);
        y(static_cast<Eigen::Index>(k - start)) = labels[order[k]];
      }
      GraphBatch batch = GraphBatch::from_graphs(ptrs, cfg.model);
      auto [loss, grads] = loss_and_gradients(batch, model, y);
      ++step;
      if (!std::isfinite(loss)) throw NonFiniteLoss(step);
      if (cfg.optimizer == Optimizer::Adam)
        apply_adam(model, grads, adam, cfg.lr);
      else
        apply_sgd(model, grads, cfg.lr);
      epoch_sum += loss * static_cast<double>(end - start);
    }
    double epoch_mean = epoch_sum / static_cast<double>(n);
    result.epoch_loss.push_back(epoch_mean);
    if (checkpoint_path.has_value()) save_checkpoint(*checkpoint_path, model, meta);
    if (on_epoch) on_epoch(epoch, epoch_mean);
  }

  result.model = std::move(model);
  return result;
}

std::vector<Prediction> predict(const Model& model, const TrainConfig& graph_cfg,
                                const std::vector<CommitRecord>& records) {
  std::vector<std::optional<AlphaAst>> built = build_graphs(records, graph_cfg);
  std::vector<Prediction> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out[i].commit_id = records[i].commit_id;
    out[i].parse_failed = !built[i].has_value();
  }
  constexpr std::size_t kChunk = 128;
  std::vector<std::size_t> pending;
  auto flush = [&]() {
    if (pending.empty()) return;
    std::vector<const AlphaAst*> ptrs;
    for (std::size_t i : pending) ptrs.push_back(&*built[i]);
    Vector probs = forward(GraphBatch::from_graphs(ptrs, model.cfg), model);
    for (std::size_t k = 0; k < pending.size(); ++k)
      out[pending[k]].prob = probs(static_cast<Eigen::Index>(k));
    pending.clear();
  };
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!built[i].has_value()) continue;
    pending.push_back(i);
    if (pending.size() >= kChunk) flush();
  }
  flush();
  return out;
}

}  // namespace vf
