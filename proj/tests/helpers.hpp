#pragma once

#include <string>

#include <vf/ast.hpp>

namespace fixtures {

// Classic off-by-bound buffer copy; the patch tightens the guard.
inline const char* kBufBefore =
    "void copy_data(char *src, char *dst, int n) {\n"
    "  char buf[BUF_SIZE];\n"
    "  for (int i = 0; i < n; i = i + 1) {\n"
    "    if (i < 2*BUF_SIZE) buf[i] = src[i];\n"
    "    dst[i] = buf[i];\n"
    "  }\n"
    "}\n";

inline const char* kBufAfter =
    "void copy_data(char *src, char *dst, int n) {\n"
    "  char buf[BUF_SIZE];\n"
    "  for (int i = 0; i < n; i = i + 1) {\n"
    "    if (i < BUF_SIZE) buf[i] = src[i];\n"
    "    dst[i] = buf[i];\n"
    "  }\n"
    "}\n";

/// First node of the given kind in preorder, or kNoNode.
inline vf::NodeId find_kind(const vf::Ast& ast, vf::NodeKind kind) {
  for (const vf::AstNode& n : ast.nodes)
    if (n.kind == kind) return n.id;
  return vf::kNoNode;
}

/// First node with the given kind and label, or kNoNode.
inline vf::NodeId find_node(const vf::Ast& ast, vf::NodeKind kind,
                            const std::string& label) {
  for (const vf::AstNode& n : ast.nodes)
    if (n.kind == kind && n.label == label) return n.id;
  return vf::kNoNode;
}

}  // namespace fixtures
