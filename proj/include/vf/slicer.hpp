#pragma once

#include <map>
#include <set>

#include <vf/ast.hpp>
#include <vf/dep_graph.hpp>

namespace vf {

enum class SliceReason : std::uint8_t { Changed, ControlRelated, DataRelated };

const char* to_string(SliceReason r);

/// Statements picked by slice(), keyed by original node id. reason records
/// why each statement entered: it owns a changed line, or it was reached
/// over a control or data dependence within the hop budget.
struct SliceResult {
  std::set<NodeId> selected;
  std::map<NodeId, SliceReason> reason;
};

/// Selects statements whose own lines intersect changed_lines, then grows
/// the set along dependence edges in both directions for up to depth hops.
/// depth 0 keeps only the changed statements (the changed-only ablation).
/// Growing depth never removes statements.
SliceResult slice(const Ast& ast, const std::set<int>& changed_lines, int depth);

/// Extracts the sliced subtree: each selected statement keeps its subtree up
/// to (but not into) nested statements, which appear only if selected
/// themselves; ancestors are retained as scaffolding so the result stays a
/// tree. Returns an empty Ast when nothing was selected. Ids are
/// renumbered preorder; spans keep original line numbers.
Ast slice_to_ast(const Ast& ast, const SliceResult& slice);

}  // namespace vf
