#include <vf/alpha_ast.hpp>

#include <algorithm>
#include <sstream>

namespace vf {
namespace {

/// Span consistency against the line map: every mapped line of the before
/// span must land inside the after span, and every line the map sends into
/// the after span must come from inside the before span. Spans none of whose
/// lines are mapped impose no constraint; their nodes pair up or not on
/// structure alone.
bool spans_consistent(const LineSpan& b, const LineSpan& a, const LineDiff& diff) {
  for (int line = b.start; line <= b.end; ++line) {
    auto it = diff.line_map.find(line);
    if (it != diff.line_map.end() && !a.contains(it->second)) return false;
  }
  for (const auto& [from, to] : diff.line_map) {
    if (to >= a.start && to <= a.end && !b.contains(from)) return false;
  }
  return true;
}

bool compatible(const AstNode& b, const AstNode& a, const LineDiff& diff) {
  return b.kind == a.kind && b.label == a.label &&
         spans_consistent(b.span, a.span, diff);
}

void match_children(const Ast& before, const Ast& after, NodeId b, NodeId a,
                    const LineDiff& diff, NodeMatching& m) {
  const auto& bc = before.node(b).children;
  const auto& ac = after.node(a).children;
  std::size_t cursor = 0;
  for (NodeId bchild : bc) {
    for (std::size_t j = cursor; j < ac.size(); ++j) {
      if (compatible(before.node(bchild), after.node(ac[j]), diff)) {
        m.b2a.emplace(bchild, ac[j]);
        m.a2b.emplace(ac[j], bchild);
        match_children(before, after, bchild, ac[j], diff, m);
        cursor = j + 1;
        break;
      }
    }
  }
}

}  // namespace

const char* to_string(Annotation a) {
  switch (a) {
    case Annotation::Unchanged: return "unchanged";
    case Annotation::Added: return "added";
    case Annotation::Deleted: return "deleted";
  }
  return "?";
}

NodeMatching match_asts(const Ast& before, const Ast& after, const LineDiff& diff) {
  NodeMatching m;
  if (before.empty() || after.empty()) return m;
  if (compatible(before.node(before.root), after.node(after.root), diff)) {
    m.b2a.emplace(before.root, after.root);
    m.a2b.emplace(after.root, before.root);
    match_children(before, after, before.root, after.root, diff, m);
  }
  return m;
}

int AlphaAst::count_nodes(Annotation a) const {
  return static_cast<int>(
      std::count_if(nodes.begin(), nodes.end(),
                    [a](const AlphaNode& n) { return n.ann == a; }));
}

int AlphaAst::count_edges(Annotation a) const {
  return static_cast<int>(
      std::count_if(edges.begin(), edges.end(),
                    [a](const AlphaEdge& e) { return e.ann == a; }));
}

AlphaAst build_alpha_ast(const Ast& before, const Ast& after, const NodeMatching& m) {
  // Validate: bijection between existing nodes, kinds equal, parents matched.
  if (m.b2a.size() != m.a2b.size())
    throw InvalidMatching("matching is not a bijection");
  std::vector<NodeId> bparent = before.parents();
  std::vector<NodeId> aparent = after.parents();
  for (const auto& [b, a] : m.b2a) {
    if (b < 0 || static_cast<std::size_t>(b) >= before.size() || a < 0 ||
        static_cast<std::size_t>(a) >= after.size())
      throw InvalidMatching("matched id out of range");
    auto it = m.a2b.find(a);
    if (it == m.a2b.end() || it->second != b)
      throw InvalidMatching("matching is not a bijection");
    if (before.node(b).kind != after.node(a).kind)
      throw InvalidMatching("matched nodes of different kinds");
    NodeId bp = bparent[static_cast<std::size_t>(b)];
    NodeId ap = aparent[static_cast<std::size_t>(a)];
    bool broot = bp == kNoNode, aroot = ap == kNoNode;
    if (broot != aroot) throw InvalidMatching("root matched to a non-root");
    if (!broot) {
      auto pit = m.b2a.find(bp);
      if (pit == m.b2a.end() || pit->second != ap)
        throw InvalidMatching("matched nodes with unmatched parents");
    }
  }

  AlphaAst g;
  // Merged ids: before nodes in preorder, then unmatched after nodes.
  std::vector<int> before_to_merged(before.size(), -1);
  std::vector<int> after_to_merged(after.size(), -1);
  for (std::size_t i = 0; i < before.size(); ++i) {
    const AstNode& n = before.nodes[i];
    AlphaNode out;
    out.id = static_cast<int>(g.nodes.size());
    out.kind = n.kind;
    out.label = n.label;
    out.before_id = n.id;
    auto it = m.b2a.find(n.id);
    if (it != m.b2a.end()) {
      out.ann = Annotation::Unchanged;
      out.after_id = it->second;
      after_to_merged[static_cast<std::size_t>(it->second)] = out.id;
    } else {
      out.ann = Annotation::Deleted;
    }
    before_to_merged[i] = out.id;
    g.nodes.push_back(std::move(out));
  }
  for (std::size_t i = 0; i < after.size(); ++i) {
    if (after_to_merged[i] >= 0) continue;
    const AstNode& n = after.nodes[i];
    AlphaNode out;
    out.id = static_cast<int>(g.nodes.size());
    out.kind = n.kind;
    out.label = n.label;
    out.ann = Annotation::Added;
    out.after_id = n.id;
    after_to_merged[i] = out.id;
    g.nodes.push_back(std::move(out));
  }

  // Edges of the before tree exist in the after tree iff both endpoints
  // matched; ancestry consistency makes the endpoint test sufficient.
  for (const AstNode& n : before.nodes) {
    for (NodeId c : n.children) {
      bool both = m.matched_before(n.id) && m.matched_before(c);
      g.edges.push_back({before_to_merged[static_cast<std::size_t>(n.id)],
                         before_to_merged[static_cast<std::size_t>(c)],
                         both ? Annotation::Unchanged : Annotation::Deleted});
    }
  }
  for (const AstNode& n : after.nodes) {
    for (NodeId c : n.children) {
      if (m.matched_after(n.id) && m.matched_after(c)) continue;  // already emitted
      g.edges.push_back({after_to_merged[static_cast<std::size_t>(n.id)],
                         after_to_merged[static_cast<std::size_t>(c)],
                         Annotation::Added});
    }
  }

  if (!before.empty()) {
    g.roots.push_back(before_to_merged[static_cast<std::size_t>(before.root)]);
    if (!after.empty() && !m.matched_after(after.root))
      g.roots.push_back(after_to_merged[static_cast<std::size_t>(after.root)]);
  } else if (!after.empty()) {
    g.roots.push_back(after_to_merged[static_cast<std::size_t>(after.root)]);
  }
  return g;
}

AlphaAst merge_under_super_root(const std::vector<AlphaAst>& components) {
  AlphaAst g;
  AlphaNode super;
  super.id = 0;
  super.kind = NodeKind::SuperRoot;
  super.ann = Annotation::Unchanged;
  g.nodes.push_back(super);
  g.roots.push_back(0);
  int offset = 1;
  for (const AlphaAst& c : components) {
    for (const AlphaNode& n : c.nodes) {
      AlphaNode copy = n;
      copy.id += offset;
      g.nodes.push_back(std::move(copy));
    }
    for (const AlphaEdge& e : c.edges)
      g.edges.push_back({e.parent + offset, e.child + offset, e.ann});
    for (int r : c.roots) {
      // the link to a fully added or deleted component is itself added or
      // deleted; a mixed component hangs off an unchanged link
      g.edges.push_back({0, r + offset, c.nodes[static_cast<std::size_t>(r)].ann});
    }
    offset += static_cast<int>(c.nodes.size());
  }
  return g;
}

std::string export_dot(const AlphaAst& g) {
  auto escape = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out;
  };
  std::ostringstream os;
  os << "digraph alpha_ast {\n";
  os << "  node [shape=box, fontname=\"monospace\"];\n";
  for (const AlphaNode& n : g.nodes) {
    std::string color = n.ann == Annotation::Added     ? "forestgreen"
                        : n.ann == Annotation::Deleted ? "crimson"
                                                       : "gray30";
    std::string style = n.ann == Annotation::Unchanged ? "solid" : "bold";
    os << "  n" << n.id << " [label=\"" << escape(to_string(n.kind));
    if (!n.label.empty()) os << "\\n" << escape(n.label);
    os << "\", color=" << color << ", style=" << style << "];\n";
  }
  for (const AlphaEdge& e : g.edges) {
    std::string color = e.ann == Annotation::Added     ? "forestgreen"
                        : e.ann == Annotation::Deleted ? "crimson"
                                                       : "gray30";
    std::string style = e.ann == Annotation::Added     ? "dashed"
                        : e.ann == Annotation::Deleted ? "dotted"
                                                       : "solid";
    os << "  n" << e.parent << " -> n" << e.child << " [color=" << color
       << ", style=" << style << "];\n";
  }
  os << "}\n";
  return os.str();
}

nlohmann::json alpha_to_json(const AlphaAst& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const AlphaNode& n : g.nodes) {
    nodes.push_back({{"id", n.id},
                     {"kind", to_string(n.kind)},
                     {"label", n.label},
                     {"annotation", to_string(n.ann)},
                     {"before_id", n.before_id},
                     {"after_id", n.after_id}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const AlphaEdge& e : g.edges) {
    edges.push_back(
        {{"parent", e.parent}, {"child", e.child}, {"annotation", to_string(e.ann)}});
  }
  return {{"nodes", nodes}, {"edges", edges}, {"roots", g.roots}};
}

}  // namespace vf
