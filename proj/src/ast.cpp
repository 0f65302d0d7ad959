#include <vf/ast.hpp>

#include <algorithm>
#include <set>

#include <json.hpp>

namespace vf {

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::TranslationUnit: return "translation-unit";
    case NodeKind::FunctionDef: return "function-def";
    case NodeKind::Param: return "param";
    case NodeKind::Block: return "block";
    case NodeKind::Decl: return "decl";
    case NodeKind::Assign: return "assign";
    case NodeKind::IfStmt: return "if-stmt";
    case NodeKind::WhileStmt: return "while-stmt";
    case NodeKind::ForStmt: return "for-stmt";
    case NodeKind::ReturnStmt: return "return-stmt";
    case NodeKind::BreakStmt: return "break-stmt";
    case NodeKind::ContinueStmt: return "continue-stmt";
    case NodeKind::CallExpr: return "call-expr";
    case NodeKind::BinaryExpr: return "binary-expr";
    case NodeKind::UnaryExpr: return "unary-expr";
    case NodeKind::SubscriptExpr: return "subscript-expr";
    case NodeKind::Identifier: return "identifier";
    case NodeKind::Literal: return "literal";
    case NodeKind::SuperRoot: return "super-root";
  }
  return "?";
}

bool is_statement_kind(NodeKind k) {
  switch (k) {
    case NodeKind::Decl:
    case NodeKind::Assign:
    case NodeKind::IfStmt:
    case NodeKind::WhileStmt:
    case NodeKind::ForStmt:
    case NodeKind::ReturnStmt:
    case NodeKind::BreakStmt:
    case NodeKind::ContinueStmt:
    case NodeKind::CallExpr:
      return true;
    default:
      return false;
  }
}

std::vector<NodeId> Ast::parents() const {
  std::vector<NodeId> p(nodes.size(), kNoNode);
  for (const AstNode& n : nodes)
    for (NodeId c : n.children) p[static_cast<std::size_t>(c)] = n.id;
  return p;
}

std::vector<NodeId> statements_of(const Ast& ast) {
  std::vector<NodeId> out;
  if (ast.empty()) return out;
  const std::vector<NodeId> parent = ast.parents();
  for (const AstNode& n : ast.nodes) {
    if (!is_statement_kind(n.kind)) continue;
    NodeId p = parent[static_cast<std::size_t>(n.id)];
    if (p == kNoNode) continue;
    NodeKind pk = ast.node(p).kind;
    if (pk == NodeKind::Block || pk == NodeKind::TranslationUnit) out.push_back(n.id);
  }
  // preorder ids follow source order
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void collect_nested_statement_extents(const Ast& ast, NodeId at, bool root,
                                      std::vector<std::pair<int, int>>& out) {
  const AstNode& n = ast.node(at);
  if (!root && is_statement_kind(n.kind)) {
    // Only statements in statement position own their lines separately;
    // loop-header parts stay with the construct.
    out.push_back({n.tok_begin, n.tok_end});
    return;
  }
  if (!root && (n.kind == NodeKind::Block || n.kind == NodeKind::TranslationUnit)) {
    for (NodeId c : n.children) collect_nested_statement_extents(ast, c, false, out);
    return;
  }
  for (NodeId c : n.children) {
    const AstNode& ch = ast.node(c);
    if (ch.kind == NodeKind::Block || ch.kind == NodeKind::TranslationUnit) {
      collect_nested_statement_extents(ast, c, false, out);
    }
  }
}

}  // namespace

std::vector<int> statement_own_lines(const Ast& ast, NodeId stmt) {
  const AstNode& s = ast.node(stmt);
  std::vector<std::pair<int, int>> nested;
  collect_nested_statement_extents(ast, stmt, true, nested);
  std::set<int> lines;
  for (int t = s.tok_begin; t < s.tok_end; ++t) {
    bool owned = true;
    for (auto [b, e] : nested)
      if (t >= b && t < e) { owned = false; break; }
    if (owned) lines.insert(ast.token_lines[static_cast<std::size_t>(t)]);
  }
  return {lines.begin(), lines.end()};
}

nlohmann::json ast_to_json(const Ast& ast) {
  nlohmann::json j;
  j["root"] = ast.root;
  nlohmann::json nodes = nlohmann::json::array();
  for (const AstNode& n : ast.nodes) {
    nodes.push_back({{"id", n.id},
                     {"kind", to_string(n.kind)},
                     {"label", n.label},
                     {"span", {n.span.start, n.span.end}},
                     {"children", n.children}});
  }
  j["nodes"] = std::move(nodes);
  return j;
}

}  // namespace vf
