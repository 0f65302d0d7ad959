#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace vf {

enum class NodeKind : std::uint8_t {
  TranslationUnit,
  FunctionDef,
  Param,
  Block,
  Decl,
  Assign,
  IfStmt,
  WhileStmt,
  ForStmt,
  ReturnStmt,
  BreakStmt,
  ContinueStmt,
  CallExpr,
  BinaryExpr,
  UnaryExpr,
  SubscriptExpr,
  Identifier,
  Literal,
  SuperRoot,
};

inline constexpr int kNodeKindCount = 19;

const char* to_string(NodeKind k);

/// Kinds that can stand as statements. Whether a concrete node counts as a
/// statement also depends on position: see statements_of.
bool is_statement_kind(NodeKind k);

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

/// 1-based inclusive source line range.
struct LineSpan {
  int start = 1;
  int end = 1;
  bool operator==(const LineSpan&) const = default;
  bool contains(int line) const { return start <= line && line <= end; }
};

struct AstNode {
  NodeId id = kNoNode;
  NodeKind kind = NodeKind::TranslationUnit;
  std::string label;  // leaf token text, operator symbol, type text, or name
  LineSpan span;
  std::vector<NodeId> children;
  // Half-open token index range covering the subtree; used to attribute
  // lines to the statement that owns them.
  int tok_begin = 0;
  int tok_end = 0;
  bool operator==(const AstNode&) const = default;
};

enum class VersionTag : std::uint8_t { Before, After };

/// Parse result. Node ids are dense preorder indices, so every parent id is
/// smaller than all ids in its subtree. root == kNoNode only for the empty
/// tree produced by slicing away everything.
struct Ast {
  NodeId root = kNoNode;
  std::vector<AstNode> nodes;
  std::vector<int> token_lines;  // line of each lexed token
  VersionTag version = VersionTag::Before;

  bool empty() const { return root == kNoNode; }
  std::size_t size() const { return nodes.size(); }
  const AstNode& node(NodeId id) const { return nodes[static_cast<std::size_t>(id)]; }

  /// parent id per node, kNoNode for the root.
  std::vector<NodeId> parents() const;

  bool operator==(const Ast& other) const {
    return root == other.root && nodes == other.nodes;
  }
};

/// Statement nodes in source order: nodes of statement kind sitting directly
/// in a block or at translation-unit scope. Loop-header declarations and
/// update assignments belong to their construct and are excluded.
std::vector<NodeId> statements_of(const Ast& ast);

/// Lines owned by a statement: lines of its tokens minus tokens of nested
/// statements. For an `if` this is the guard, not the guarded body.
std::vector<int> statement_own_lines(const Ast& ast, NodeId stmt);

nlohmann::json ast_to_json(const Ast& ast);

}  // namespace vf
