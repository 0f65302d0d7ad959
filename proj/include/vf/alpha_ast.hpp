#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include <vf/ast.hpp>
#include <vf/diff.hpp>
#include <vf/errors.hpp>

namespace vf {

enum class Annotation : std::uint8_t { Unchanged = 0, Added = 1, Deleted = 2 };

inline constexpr int kAnnotationCount = 3;

const char* to_string(Annotation a);

/// Bijection between before and after nodes. Matched pairs always have equal
/// kind and label, and matched parents.
struct NodeMatching {
  std::map<NodeId, NodeId> b2a;
  std::map<NodeId, NodeId> a2b;

  bool matched_before(NodeId b) const { return b2a.count(b) > 0; }
  bool matched_after(NodeId a) const { return a2b.count(a) > 0; }
  NodeMatching inverted() const { return {a2b, b2a}; }
};

/// Top-down greedy matcher anchored on the line diff. Two nodes match iff
/// kind and label are equal (for leaves the label is the token text), their
/// parents match (roots match each other), and their spans are consistent
/// with the line map: every mapped line of one span lands inside the other
/// span. Siblings are paired greedily left to right, so a relocated subtree
/// comes out as one deletion plus one addition.
NodeMatching match_asts(const Ast& before, const Ast& after, const LineDiff& diff);

struct AlphaNode {
  int id = 0;
  NodeKind kind = NodeKind::TranslationUnit;
  std::string label;
  Annotation ann = Annotation::Unchanged;
  NodeId before_id = kNoNode;
  NodeId after_id = kNoNode;
};

struct AlphaEdge {
  int parent = 0;
  int child = 0;
  Annotation ann = Annotation::Unchanged;
};

/// Merged annotated tree of a commit: one node per matched pair, plus the
/// unmatched nodes of each side. A node or edge is unchanged iff it exists
/// in both versions, deleted iff only in the before version, added iff only
/// in the after version.
struct AlphaAst {
  std::vector<AlphaNode> nodes;
  std::vector<AlphaEdge> edges;
  std::vector<int> roots;

  int count_nodes(Annotation a) const;
  int count_edges(Annotation a) const;
};

/// Merges two sliced trees under a matching. Throws InvalidMatching if the
/// matching is not a kind-preserving ancestry-consistent bijection.
AlphaAst build_alpha_ast(const Ast& before, const Ast& after, const NodeMatching& m);

/// Joins per-file components under one synthetic unchanged super-root.
/// With no components the result is the bare super-root.
AlphaAst merge_under_super_root(const std::vector<AlphaAst>& components);

/// Graphviz rendering with one style per annotation. Deterministic order.
std::string export_dot(const AlphaAst& g);

nlohmann::json alpha_to_json(const AlphaAst& g);

}  // namespace vf
