#pragma once

#include <vector>

#include <vf/ast.hpp>

namespace vf {

enum class DepKind : std::uint8_t { Control, Data };

struct DepEdge {
  NodeId from = kNoNode;
  NodeId to = kNoNode;
  DepKind kind = DepKind::Control;
  bool operator==(const DepEdge&) const = default;
};

/// Statement-level dependence graph over statements_of(ast).
///
/// Control: edge from each if/while/for statement to every statement directly
/// in its body (and else branch). Data: def-use edges from reaching
/// definitions on an approximate CFG (sequential within a block, both
/// branches of an if, loop bodies may repeat). A write through a[i] defines
/// a without killing other definitions of a and reads i; a read of a[i]
/// reads a and i. Calls are treated as pure reads of their arguments.
struct DependencyGraph {
  std::vector<NodeId> statements;  // source order
  std::vector<DepEdge> edges;      // deterministic order, no duplicates

  std::vector<DepEdge> edges_touching(NodeId stmt) const;
};

DependencyGraph build_dependency_graph(const Ast& ast);

}  // namespace vf
