#include <vf/slicer.hpp>

#include <algorithm>
#include <deque>

namespace vf {
namespace {

/// Keep-set for slice_to_ast.
///
/// Scaffold mode: the node survives only if it is selected (switching its
/// subtree to inside mode) or lies on the spine above a selection. Inside
/// mode: everything survives except children in statement position, which
/// drop back to scaffold mode so unselected nested statements vanish while
/// loop headers and conditions stay with their construct.
void mark_kept(const Ast& ast, NodeId id, bool inside, const std::set<NodeId>& selected,
               const std::vector<char>& on_spine, std::vector<char>& keep) {
  const AstNode& n = ast.node(id);
  if (!inside) {
    if (selected.count(id))
      inside = true;
    else if (!on_spine[static_cast<std::size_t>(id)])
      return;
  }
  keep[static_cast<std::size_t>(id)] = 1;
  bool is_scope = n.kind == NodeKind::Block || n.kind == NodeKind::TranslationUnit;
  for (NodeId c : n.children) {
    bool stmt_position = is_scope && is_statement_kind(ast.node(c).kind);
    mark_kept(ast, c, inside && !stmt_position, selected, on_spine, keep);
  }
}

}  // namespace

const char* to_string(SliceReason r) {
  switch (r) {
    case SliceReason::Changed: return "changed";
    case SliceReason::ControlRelated: return "control";
    case SliceReason::DataRelated: return "data";
  }
  return "?";
}

SliceResult slice(const Ast& ast, const std::set<int>& changed_lines, int depth) {
  SliceResult result;
  if (ast.empty()) return result;

  DependencyGraph deps = build_dependency_graph(ast);
  for (NodeId s : deps.statements) {
    std::vector<int> own = statement_own_lines(ast, s);
    bool hit = std::any_of(own.begin(), own.end(),
                           [&](int line) { return changed_lines.count(line) > 0; });
    if (hit) {
      result.selected.insert(s);
      result.reason.emplace(s, SliceReason::Changed);
    }
  }

  // Breadth-first growth over dependence edges, both directions. Control
  // neighbors are visited before data neighbors, so a statement reachable
  // both ways is recorded with the control reason.
  std::deque<std::pair<NodeId, int>> frontier;
  for (NodeId s : result.selected) frontier.emplace_back(s, 0);
  while (!frontier.empty()) {
    auto [s, dist] = frontier.front();
    frontier.pop_front();
    if (dist >= depth) continue;
    for (const DepEdge& e : deps.edges_touching(s)) {
      NodeId other = e.from == s ? e.to : e.from;
      if (result.selected.count(other)) continue;
      result.selected.insert(other);
      result.reason.emplace(other, e.kind == DepKind::Control
                                       ? SliceReason::ControlRelated
                                       : SliceReason::DataRelated);
      frontier.emplace_back(other, dist + 1);
    }
  }
  return result;
}

Ast slice_to_ast(const Ast& ast, const SliceResult& slice) {
  Ast out;
  out.version = ast.version;
  if (ast.empty() || slice.selected.empty()) return out;

  // Spine: every ancestor of a selected statement.
  std::vector<NodeId> parent = ast.parents();
  std::vector<char> on_spine(ast.size(), 0);
  for (NodeId s : slice.selected) {
    for (NodeId p = parent[static_cast<std::size_t>(s)]; p != kNoNode;
         p = parent[static_cast<std::size_t>(p)])
      on_spine[static_cast<std::size_t>(p)] = 1;
  }

  std::vector<char> keep(ast.size(), 0);
  mark_kept(ast, ast.root, false, slice.selected, on_spine, keep);

  // Rebuild kept nodes in preorder; children keep their relative order.
  std::vector<NodeId> remap(ast.size(), kNoNode);
  struct Frame { NodeId id; NodeId new_parent; };
  std::vector<Frame> stack{{ast.root, kNoNode}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (!keep[static_cast<std::size_t>(f.id)]) continue;
    const AstNode& src = ast.node(f.id);
    AstNode copy;
    copy.id = static_cast<NodeId>(out.nodes.size());
    copy.kind = src.kind;
    copy.label = src.label;
    copy.span = src.span;
    copy.tok_begin = src.tok_begin;
    copy.tok_end = src.tok_end;
    remap[static_cast<std::size_t>(f.id)] = copy.id;
    if (f.new_parent != kNoNode)
      out.nodes[static_cast<std::size_t>(f.new_parent)].children.push_back(copy.id);
    NodeId my_id = copy.id;
    out.nodes.push_back(std::move(copy));
    // push children reversed so they pop in source order
    for (auto it = src.children.rbegin(); it != src.children.rend(); ++it)
      stack.push_back({*it, my_id});
  }
  out.root = out.nodes.empty() ? kNoNode : 0;
  out.token_lines = ast.token_lines;
  return out;
}

}  // namespace vf
