#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <vf/alpha_ast.hpp>
#include <vf/checkpoint.hpp>
#include <vf/corpus.hpp>
#include <vf/diff.hpp>
#include <vf/errors.hpp>
#include <vf/metrics.hpp>
#include <vf/parser.hpp>
#include <vf/slicer.hpp>
#include <vf/synthetic.hpp>
#include <vf/trainer.hpp>

namespace {

using namespace vf;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << content;
  if (!f) throw IoError("error while writing " + path);
}

std::set<int> parse_line_list(const std::string& text) {
  std::set<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      int v = std::stoi(item, &used);
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used])))
        ++used;
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.insert(v);
    } catch (const std::exception&) {
      throw SchemaError("expected a comma-separated list of line numbers", 0, "--changed");
    }
  }
  return out;
}

std::vector<std::int64_t> parse_strata(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw SchemaError("expected ascending positive integers", 0, "--strata");
    }
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1])
      throw SchemaError("expected ascending positive integers", 0, "--strata");
  return out;
}

void print_tree(const Ast& ast, NodeId id, int depth, std::ostream& os) {
  const AstNode& n = ast.node(id);
  os << std::string(static_cast<std::size_t>(depth) * 2, ' ') << to_string(n.kind);
  if (!n.label.empty()) os << " '" << n.label << "'";
  os << " [" << n.span.start << "," << n.span.end << "]\n";
  for (NodeId c : n.children) print_tree(ast, c, depth + 1, os);
}

// --- subcommand payloads -----------------------------------------------------

struct GenArgs {
  int fix = 500;
  int nonfix = 500;
  std::uint64_t seed = 1;
  std::string out;
};

int run_gen(const GenArgs& a) {
  nlohmann::json echo = {
      {"fix", a.fix}, {"nonfix", a.nonfix}, {"seed", a.seed}, {"out", a.out}};
  std::cout << echo.dump(2) << "\n";
  std::vector<CommitRecord> corpus = gen_synthetic(a.fix, a.nonfix, a.seed);
  save_corpus(corpus, a.out);
  std::cerr << "wrote " << corpus.size() << " commits to " << a.out << "\n";
  return 0;
}

struct BuildGraphArgs {
  std::string before, after, dot, json;
  int depth = 1;
  bool changed_only = false;
};

int run_build_graph(const BuildGraphArgs& a) {
  TrainConfig cfg;
  cfg.slice_depth = a.depth;
  cfg.use_unchanged = !a.changed_only;
  CommitRecord rec;
  rec.commit_id = "cli";
  rec.files.push_back({a.before, read_file(a.before), read_file(a.after)});
  AlphaAst g = commit_to_graph(rec, cfg);
  write_file(a.dot, export_dot(g));
  if (!a.json.empty()) write_file(a.json, alpha_to_json(g).dump(2));
  std::cout << "nodes: " << g.nodes.size() << " (unchanged "
            << g.count_nodes(Annotation::Unchanged) << ", added "
            << g.count_nodes(Annotation::Added) << ", deleted "
            << g.count_nodes(Annotation::Deleted) << ")\n";
  std::cout << "edges: " << g.edges.size() << " (unchanged "
            << g.count_edges(Annotation::Unchanged) << ", added "
            << g.count_edges(Annotation::Added) << ", deleted "
            << g.count_edges(Annotation::Deleted) << ")\n";
  return 0;
}

struct InspectArgs {
  std::string source;
  bool as_json = false;
  bool do_slice = false;
  std::string changed;
  int depth = 1;
};

int run_inspect(const InspectArgs& a) {
  Ast ast = parse_source(read_file(a.source), VersionTag::Before);
  if (!a.do_slice) {
    if (a.as_json)
      std::cout << ast_to_json(ast).dump(2) << "\n";
    else
      print_tree(ast, ast.root, 0, std::cout);
    return 0;
  }
  std::set<int> changed = parse_line_list(a.changed);
  if (changed.empty())
    throw SchemaError("a slice needs at least one changed line", 0, "--changed");
  SliceResult result = slice(ast, changed, a.depth);
  Ast sliced = slice_to_ast(ast, result);
  if (a.as_json) {
    nlohmann::json sel = nlohmann::json::array();
    for (NodeId s : result.selected) {
      const AstNode& n = ast.node(s);
      sel.push_back({{"id", s},
                     {"kind", to_string(n.kind)},
                     {"span", {n.span.start, n.span.end}},
                     {"reason", to_string(result.reason.at(s))}});
    }
    nlohmann::json j = {{"selected", sel}, {"sliced", ast_to_json(sliced)}};
    std::cout << j.dump(2) << "\n";
  } else {
    for (NodeId s : result.selected) {
      const AstNode& n = ast.node(s);
      std::cout << "selected " << to_string(n.kind) << " [" << n.span.start << ","
                << n.span.end << "] (" << to_string(result.reason.at(s)) << ")\n";
    }
    if (!sliced.empty()) {
      std::cout << "sliced tree:\n";
      print_tree(sliced, sliced.root, 1, std::cout);
    } else {
      std::cout << "sliced tree is empty\n";
    }
  }
  return 0;
}

struct TrainArgs {
  std::string corpus;
  std::string config;
  std::string out = "model.ckpt";
  CLI::App* sub = nullptr;
  int epochs = 0;
  double lr = 0;
  int batch = 0;
  std::string flavor;
  std::uint64_t seed = 0;
  int depth = 0;
  bool changed_only = false;
  int jobs = 0;
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg;
  if (!a.config.empty()) {
    nlohmann::json j = nlohmann::json::parse(read_file(a.config), nullptr, false);
    if (j.is_discarded()) throw SchemaError("config file is not valid JSON", 0, "");
    cfg = train_config_from_json(j);
  }
  if (a.sub->count("--epochs")) cfg.epochs = a.epochs;
  if (a.sub->count("--lr")) cfg.lr = a.lr;
  if (a.sub->count("--batch")) cfg.batch_size = a.batch;
  if (a.sub->count("--flavor")) cfg.model.flavor = flavor_from_string(a.flavor);
  if (a.sub->count("--seed")) {
    cfg.seed = a.seed;
    cfg.model.seed = a.seed;
  }
  if (a.sub->count("--depth")) cfg.slice_depth = a.depth;
  if (a.sub->count("--changed-only")) cfg.use_unchanged = !a.changed_only;
  if (a.sub->count("--jobs")) cfg.jobs = a.jobs;

  std::cout << to_json(cfg).dump(2) << "\n";

  std::vector<CommitRecord> corpus = load_corpus(a.corpus);
  Split split = time_split(corpus, 0.8);
  std::cerr << "train " << split.train.size() << " commits, holding out "
            << split.test.size() << " from timestamp " << split.cut << "\n";

  CheckpointMeta meta;
  meta.cut_timestamp = split.cut;

  std::string log_path = a.out + ".log.jsonl";
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw IoError("cannot open " + log_path + " for writing");

  auto t0 = std::chrono::steady_clock::now();
  auto on_epoch = [&](int epoch, double loss) {
    nlohmann::json line = {{"epoch", epoch}, {"loss", loss}};
    log << line.dump() << "\n";
    log.flush();
    auto now = std::chrono::steady_clock::now();
    double secs = std::chrono::duration<double>(now - t0).count();
    std::cerr << "epoch " << epoch << " loss " << loss << " (" << secs << "s elapsed)\n";
  };
  TrainResult result = train(split.train, cfg, a.out, meta, on_epoch);
  if (result.parse_failures > 0)
    std::cerr << "skipped " << result.parse_failures << " unparseable commits\n";
  std::cerr << "wrote checkpoint " << a.out << " and log " << log_path << "\n";
  return 0;
}

struct EvalArgs {
  std::string corpus;
  std::string model;
  std::int64_t ce_l = 50000;
  double neg_ratio = 0;
  std::uint64_t seed = 1;
  std::string strata;
  double threshold = 0.5;
  std::string report;
  int jobs = 0;
  CLI::App* sub = nullptr;
};

std::vector<CommitRecord> resample_negatives(const std::vector<CommitRecord>& test,
                                             double ratio, std::uint64_t seed) {
  std::vector<CommitRecord> fixes, pool;
  for (const CommitRecord& r : test) (r.is_fix ? fixes : pool).push_back(r);
  std::size_t want = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(fixes.size())));
  std::vector<CommitRecord> out = fixes;
  if (pool.empty()) {
    if (want > 0) std::cerr << "no non-fixes to sample; evaluating fixes only\n";
    return out;
  }
  std::mt19937_64 rng(seed);
  if (pool.size() >= want) {
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < want; ++i) {
      std::size_t j = i + rng() % (idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    for (std::size_t i = 0; i < want; ++i) out.push_back(pool[idx[i]]);
  } else {
    std::cerr << "non-fix pool smaller than requested sample; drawing with replacement\n";
    for (std::size_t i = 0; i < want; ++i)
      out.push_back(pool[rng() % pool.size()]);
  }
  return out;
}

int run_eval(const EvalArgs& a) {
  Checkpoint ckpt = load_checkpoint(a.model);
  std::vector<CommitRecord> corpus = load_corpus(a.corpus);
  std::vector<CommitRecord> test;
  if (ckpt.meta.cut_timestamp > 0) {
    for (const CommitRecord& r : corpus)
      if (r.timestamp >= ckpt.meta.cut_timestamp) test.push_back(r);
  } else {
    test = corpus;
  }
  if (a.sub->count("--neg-ratio")) test = resample_negatives(test, a.neg_ratio, a.seed);
  if (test.empty()) throw DegenerateSplit("no commits to evaluate");

  TrainConfig graph_cfg;
  graph_cfg.model = ckpt.model.cfg;
  graph_cfg.slice_depth = ckpt.meta.slice_depth;
  graph_cfg.use_unchanged = ckpt.meta.use_unchanged;
  graph_cfg.jobs = a.jobs;

  std::vector<Prediction> preds = predict(ckpt.model, graph_cfg, test);
  std::vector<Scored> scored(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    scored[i].is_fix = test[i].is_fix;
    scored[i].prob = preds[i].prob;
    scored[i].changed_loc = test[i].changed_loc;
  }
  EvalReport rep =
      evaluate_scored(scored, a.threshold, a.ce_l, parse_strata(a.strata));
  std::cout << report_table(rep);
  if (!a.report.empty()) write_file(a.report, report_to_json(rep).dump(2));
  return 0;
}

struct PredictArgs {
  std::string corpus;
  std::string model;
  std::string out;
  int jobs = 0;
};

int run_predict(const PredictArgs& a) {
  Checkpoint ckpt = load_checkpoint(a.model);
  std::vector<CommitRecord> corpus = load_corpus(a.corpus);
  TrainConfig graph_cfg;
  graph_cfg.model = ckpt.model.cfg;
  graph_cfg.slice_depth = ckpt.meta.slice_depth;
  graph_cfg.use_unchanged = ckpt.meta.use_unchanged;
  graph_cfg.jobs = a.jobs;
  std::vector<Prediction> preds = predict(ckpt.model, graph_cfg, corpus);
  std::string lines;
  for (const Prediction& p : preds) {
    nlohmann::json j = {
        {"commit_id", p.commit_id}, {"prob", p.prob}, {"parse_failed", p.parse_failed}};
    lines += j.dump();
    lines += '\n';
  }
  write_file(a.out, lines);
  std::cerr << "wrote " << preds.size() << " scores to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph-based detector of silent vulnerability-fixing commits"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-corpus", "generate a synthetic labeled corpus");
  gen_cmd->add_option("--fix", gen.fix, "number of fix commits")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--nonfix", gen.nonfix, "number of non-fix commits")
      ->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--out", gen.out, "output corpus path (.jsonl or .jsonl.gz)")->required();

  BuildGraphArgs bg;
  CLI::App* bg_cmd =
      app.add_subcommand("build-graph", "merge two file versions into an annotated graph");
  bg_cmd->add_option("--before", bg.before, "before version of the file")->required();
  bg_cmd->add_option("--after", bg.after, "after version of the file")->required();
  bg_cmd->add_option("--depth", bg.depth, "slice growth in dependence hops")
      ->check(CLI::NonNegativeNumber);
  bg_cmd->add_flag("--changed-only", bg.changed_only, "keep only changed statements");
  bg_cmd->add_option("--dot", bg.dot, "write Graphviz output here")->required();
  bg_cmd->add_option("--json", bg.json, "also write a JSON rendering here");

  InspectArgs ins;
  CLI::App* ins_cmd = app.add_subcommand("inspect", "parse one file and show its tree");
  ins_cmd->add_option("--source", ins.source, "C source file")->required();
  ins_cmd->add_flag("--json", ins.as_json, "emit JSON instead of text");
  ins_cmd->add_flag("--slice", ins.do_slice, "also slice around changed lines");
  ins_cmd->add_option("--changed", ins.changed, "comma-separated changed lines");
  ins_cmd->add_option("--depth", ins.depth, "slice growth in dependence hops")
      ->check(CLI::NonNegativeNumber);

  TrainArgs tr;
  CLI::App* tr_cmd = app.add_subcommand("train", "train a classifier on a corpus");
  tr_cmd->add_option("--corpus", tr.corpus, "labeled corpus (JSONL, optionally .gz)")->required();
  tr_cmd->add_option("--config", tr.config, "JSON file with training configuration");
  tr_cmd->add_option("--out", tr.out, "checkpoint path");
  tr_cmd->add_option("--epochs", tr.epochs, "training epochs")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--lr", tr.lr, "learning rate");
  tr_cmd->add_option("--batch", tr.batch, "batch size")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--flavor", tr.flavor, "gat, gcn, gin, or sage");
  tr_cmd->add_option("--seed", tr.seed, "training and init seed");
  tr_cmd->add_option("--depth", tr.depth, "slice growth in dependence hops")
      ->check(CLI::NonNegativeNumber);
  tr_cmd->add_flag("--changed-only", tr.changed_only, "ablation: slice keeps changed statements only");
  tr_cmd->add_option("--jobs", tr.jobs, "graph building threads")->check(CLI::NonNegativeNumber);
  tr.sub = tr_cmd;

  EvalArgs ev;
  CLI::App* ev_cmd = app.add_subcommand("evaluate", "score a corpus test split");
  ev_cmd->add_option("--corpus", ev.corpus, "labeled corpus")->required();
  ev_cmd->add_option("--model", ev.model, "checkpoint to evaluate")->required();
  ev_cmd->add_option("--ce-l", ev.ce_l, "inspection budget in changed lines")
      ->check(CLI::PositiveNumber);
  ev_cmd->add_option("--neg-ratio", ev.neg_ratio, "non-fix to fix ratio to resample")
      ->check(CLI::NonNegativeNumber);
  ev_cmd->add_option("--seed", ev.seed, "resampling seed");
  ev_cmd->add_option("--strata", ev.strata, "changed-loc bin edges, e.g. 1,10,100,500");
  ev_cmd->add_option("--threshold", ev.threshold, "decision threshold");
  ev_cmd->add_option("--report", ev.report, "write the full JSON report here");
  ev_cmd->add_option("--jobs", ev.jobs, "graph building threads")->check(CLI::NonNegativeNumber);
  ev.sub = ev_cmd;

  PredictArgs pr;
  CLI::App* pr_cmd = app.add_subcommand("predict", "score every commit in a corpus");
  pr_cmd->add_option("--corpus", pr.corpus, "corpus to score")->required();
  pr_cmd->add_option("--model", pr.model, "checkpoint")->required();
  pr_cmd->add_option("--out", pr.out, "output scores (JSONL)")->required();
  pr_cmd->add_option("--jobs", pr.jobs, "graph building threads")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen_cmd->parsed()) return run_gen(gen);
    if (bg_cmd->parsed()) return run_build_graph(bg);
    if (ins_cmd->parsed()) return run_inspect(ins);
    if (tr_cmd->parsed()) return run_train(tr);
    if (ev_cmd->parsed()) return run_eval(ev);
    if (pr_cmd->parsed()) return run_predict(pr);
    std::cerr << "no subcommand given\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const SchemaError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const DegenerateSplit& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
