#include <vf/dep_graph.hpp>

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>

namespace vf {
namespace {

/// Statements directly inside a block, looking through nested bare blocks.
void block_items(const Ast& ast, NodeId block, std::vector<NodeId>& out) {
  for (NodeId c : ast.node(block).children) {
    const AstNode& n = ast.node(c);
    if (n.kind == NodeKind::Block)
      block_items(ast, c, out);
    else if (is_statement_kind(n.kind))
      out.push_back(c);
  }
}

std::vector<NodeId> block_items(const Ast& ast, NodeId block) {
  std::vector<NodeId> out;
  block_items(ast, block, out);
  return out;
}

/// Variables read by an expression. Subscript reads base and index; a call
/// reads its arguments but not the callee name.
void collect_reads(const Ast& ast, NodeId id, std::set<std::string>& out) {
  const AstNode& n = ast.node(id);
  switch (n.kind) {
    case NodeKind::Identifier:
      out.insert(n.label);
      return;
    case NodeKind::Literal:
      return;
    case NodeKind::CallExpr:
      for (std::size_t i = 1; i < n.children.size(); ++i)
        collect_reads(ast, n.children[i], out);
      return;
    default:
      for (NodeId c : n.children) collect_reads(ast, c, out);
      return;
  }
}

struct DefUse {
  std::vector<std::pair<std::string, bool>> defs;  // (variable, killing)
  std::set<std::string> uses;
};

/// Writing through a subscript defines the base array without killing other
/// definitions of it; the index (and any nested base) is read.
void add_lvalue(const Ast& ast, NodeId lhs, bool killing, DefUse& du) {
  const AstNode& n = ast.node(lhs);
  if (n.kind == NodeKind::Identifier) {
    du.defs.emplace_back(n.label, killing);
    return;
  }
  if (n.kind == NodeKind::SubscriptExpr) {
    collect_reads(ast, n.children[1], du.uses);
    add_lvalue(ast, n.children[0], false, du);
    return;
  }
  collect_reads(ast, lhs, du.uses);  // not a recognized lvalue shape
}

void analyze_assign(const Ast& ast, NodeId id, DefUse& du) {
  const AstNode& n = ast.node(id);
  if (n.label == "=") {
    add_lvalue(ast, n.children[0], true, du);
    collect_reads(ast, n.children[1], du.uses);
  } else {  // ++ or -- both read and write their operand
    collect_reads(ast, n.children[0], du.uses);
    add_lvalue(ast, n.children[0], true, du);
  }
}

void analyze_decl(const Ast& ast, NodeId id, DefUse& du) {
  const AstNode& n = ast.node(id);
  du.defs.emplace_back(ast.node(n.children[0]).label, true);
  for (std::size_t i = 1; i < n.children.size(); ++i)
    collect_reads(ast, n.children[i], du.uses);
}

DefUse analyze(const Ast& ast, NodeId id) {
  DefUse du;
  const AstNode& n = ast.node(id);
  switch (n.kind) {
    case NodeKind::Decl:
      analyze_decl(ast, id, du);
      break;
    case NodeKind::Assign:
      analyze_assign(ast, id, du);
      break;
    case NodeKind::IfStmt:
    case NodeKind::WhileStmt:
      collect_reads(ast, n.children[0], du.uses);
      break;
    case NodeKind::ForStmt: {
      // children: init declarations or assignment, condition, update, body
      std::size_t count = n.children.size();
      for (std::size_t i = 0; i + 3 < count; ++i) {
        NodeId init = n.children[i];
        if (ast.node(init).kind == NodeKind::Decl)
          analyze_decl(ast, init, du);
        else
          analyze_assign(ast, init, du);
      }
      collect_reads(ast, n.children[count - 3], du.uses);
      analyze_assign(ast, n.children[count - 2], du);
      break;
    }
    case NodeKind::ReturnStmt:
      if (!n.children.empty()) collect_reads(ast, n.children[0], du.uses);
      break;
    case NodeKind::CallExpr:
      collect_reads(ast, id, du.uses);
      break;
    default:
      break;
  }
  return du;
}

using DefPoint = std::pair<int, std::string>;  // statement index, variable

struct CfgBuilder {
  const Ast& ast;
  const std::map<NodeId, int>& index;
  std::map<int, std::set<int>> preds;

  void add_edge(int from, int to) { preds[to].insert(from); }

  std::vector<int> wire_seq(const std::vector<NodeId>& items, std::vector<int> incoming) {
    for (NodeId item : items) {
      int s = index.at(item);
      for (int p : incoming) add_edge(p, s);
      incoming = wire(item);
    }
    return incoming;
  }

  std::vector<int> wire(NodeId id) {
    int self = index.at(id);
    const AstNode& n = ast.node(id);
    switch (n.kind) {
      case NodeKind::ReturnStmt:
        return {};
      case NodeKind::IfStmt: {
        std::vector<int> exits = wire_seq(block_items(ast, n.children[1]), {self});
        if (n.children.size() > 2) {
          std::vector<int> e2 = wire_seq(block_items(ast, n.children[2]), {self});
          exits.insert(exits.end(), e2.begin(), e2.end());
        } else {
          exits.push_back(self);  // condition-false path
        }
        return exits;
      }
      case NodeKind::WhileStmt:
      case NodeKind::ForStmt: {
        NodeId body = n.children.back();
        std::vector<int> body_exits = wire_seq(block_items(ast, body), {self});
        for (int e : body_exits) add_edge(e, self);  // loop back edge
        return {self};
      }
      default:
        return {self};
    }
  }
};

}  // namespace

std::vector<DepEdge> DependencyGraph::edges_touching(NodeId stmt) const {
  std::vector<DepEdge> out;
  for (const DepEdge& e : edges)
    if (e.kind == DepKind::Control && (e.from == stmt || e.to == stmt)) out.push_back(e);
  for (const DepEdge& e : edges)
    if (e.kind == DepKind::Data && (e.from == stmt || e.to == stmt)) out.push_back(e);
  return out;
}

DependencyGraph build_dependency_graph(const Ast& ast) {
  DependencyGraph g;
  if (ast.empty()) return g;
  g.statements = statements_of(ast);

  std::map<NodeId, int> index;
  for (std::size_t i = 0; i < g.statements.size(); ++i)
    index.emplace(g.statements[i], static_cast<int>(i));

  std::vector<DefUse> info;
  info.reserve(g.statements.size());
  for (NodeId s : g.statements) info.push_back(analyze(ast, s));

  std::set<std::tuple<NodeId, NodeId, int>> edge_set;

  // Control dependence: guard to each statement directly in its branches.
  for (NodeId s : g.statements) {
    const AstNode& n = ast.node(s);
    std::vector<NodeId> targets;
    if (n.kind == NodeKind::IfStmt) {
      block_items(ast, n.children[1], targets);
      if (n.children.size() > 2) block_items(ast, n.children[2], targets);
    } else if (n.kind == NodeKind::WhileStmt || n.kind == NodeKind::ForStmt) {
      block_items(ast, n.children.back(), targets);
    }
    for (NodeId t : targets) edge_set.emplace(s, t, 0);
  }

  // Approximate CFG per function; file-scope declarations seed each
  // function's entry with the definitions visible at its point of definition.
  CfgBuilder cfg{ast, index, {}};
  std::map<int, std::set<DefPoint>> seed;
  std::set<DefPoint> globals;
  int prev_global = -1;
  for (NodeId c : ast.node(ast.root).children) {
    const AstNode& n = ast.node(c);
    if (n.kind == NodeKind::Decl) {
      int i = index.at(c);
      if (prev_global >= 0) cfg.add_edge(prev_global, i);
      prev_global = i;
      std::erase_if(globals, [&](const DefPoint& d) {
        return d.second == ast.node(ast.node(c).children[0]).label;
      });
      globals.emplace(i, ast.node(ast.node(c).children[0]).label);
    } else if (n.kind == NodeKind::FunctionDef) {
      std::vector<NodeId> body = block_items(ast, n.children.back());
      if (!body.empty()) seed[index.at(body.front())] = globals;
      cfg.wire_seq(body, {});
    }
  }

  // Reaching definitions to a fixpoint.
  std::size_t count = g.statements.size();
  std::vector<std::set<DefPoint>> in(count), out(count);
  std::deque<int> work;
  for (std::size_t i = 0; i < count; ++i) work.push_back(static_cast<int>(i));
  std::set<int> queued(work.begin(), work.end());
  while (!work.empty()) {
    int i = work.front();
    work.pop_front();
    queued.erase(i);
    std::set<DefPoint> next_in;
    if (auto it = seed.find(i); it != seed.end()) next_in = it->second;
    for (int p : cfg.preds[i]) next_in.insert(out[p].begin(), out[p].end());
    std::set<DefPoint> next_out;
    std::set<std::string> killed;
    for (const auto& [var, killing] : info[static_cast<std::size_t>(i)].defs)
      if (killing) killed.insert(var);
    for (const DefPoint& d : next_in)
      if (!killed.count(d.second)) next_out.insert(d);
    for (const auto& [var, killing] : info[static_cast<std::size_t>(i)].defs)
      next_out.emplace(i, var);
    bool changed = next_out != out[static_cast<std::size_t>(i)];
    in[static_cast<std::size_t>(i)] = std::move(next_in);
    out[static_cast<std::size_t>(i)] = std::move(next_out);
    if (changed) {
      for (std::size_t t = 0; t < count; ++t) {
        if (cfg.preds[static_cast<int>(t)].count(i) && !queued.count(static_cast<int>(t))) {
          work.push_back(static_cast<int>(t));
          queued.insert(static_cast<int>(t));
        }
      }
    }
  }

  // Def-use edges from reaching definitions.
  for (std::size_t t = 0; t < count; ++t) {
    for (const DefPoint& d : in[t]) {
      if (d.first == static_cast<int>(t)) continue;
      if (info[t].uses.count(d.second))
        edge_set.emplace(g.statements[static_cast<std::size_t>(d.first)],
                         g.statements[t], 1);
    }
  }

  for (const auto& [from, to, kind] : edge_set)
    g.edges.push_back({from, to, kind == 0 ? DepKind::Control : DepKind::Data});
  return g;
}

}  // namespace vf
