#pragma once

#include <string>

#include <vf/ast.hpp>
#include <vf/errors.hpp>

namespace vf {

/// Recursive-descent parser for a small C subset: function definitions,
/// declarations (including array and pointer declarators), if/else, while,
/// for, assignments, calls, return/break/continue, and ordinary expressions
/// with standard precedence. No preprocessor, typedefs, structs, or casts;
/// unknown uppercase names like BUF_SIZE stay opaque identifier leaves.
/// Throws ParseError with 1-based line/column on unsupported syntax.
Ast parse_source(const std::string& source, VersionTag version);

}  // namespace vf
