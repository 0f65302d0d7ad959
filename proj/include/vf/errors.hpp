#pragma once

#include <stdexcept>
#include <string>

namespace vf {

/// Raised by the lexer/parser; line and column are 1-based.
struct ParseError : std::runtime_error {
  int line;
  int column;
  ParseError(const std::string& what, int line, int column)
      : std::runtime_error("parse error at " + std::to_string(line) + ":" +
                           std::to_string(column) + ": " + what),
        line(line),
        column(column) {}

  /// Same error with the file path prepended, message otherwise untouched.
  static ParseError in_file(const std::string& path, const ParseError& e) {
    return ParseError(Raw{}, path + ": " + e.what(), e.line, e.column);
  }

 private:
  struct Raw {};
  ParseError(Raw, const std::string& formatted, int line, int column)
      : std::runtime_error(formatted), line(line), column(column) {}
};

/// Corpus record failed validation; line is the 1-based JSONL line.
struct SchemaError : std::runtime_error {
  int line;
  std::string field;
  SchemaError(const std::string& what, int line, std::string field)
      : std::runtime_error("schema error at line " + std::to_string(line) +
                           " (" + field + "): " + what),
        line(line),
        field(std::move(field)) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Time split impossible: every record shares one timestamp, or the
/// requested train fraction cannot be reached by any cut.
struct DegenerateSplit : std::runtime_error {
  explicit DegenerateSplit(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidMatching : std::runtime_error {
  explicit InvalidMatching(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteLoss : std::runtime_error {
  int batch_index;
  explicit NonFiniteLoss(int batch_index)
      : std::runtime_error("non-finite loss in batch " + std::to_string(batch_index)),
        batch_index(batch_index) {}
};

}  // namespace vf
