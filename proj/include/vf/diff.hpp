#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace vf {

/// Line-level diff of two texts. Lines are 1-based. line_map pairs the lines
/// kept by a longest-common-subsequence alignment; it is strictly increasing
/// in both coordinates. deleted/added are the complement on each side.
struct LineDiff {
  std::set<int> deleted;        // before lines with no counterpart
  std::set<int> added;          // after lines with no counterpart
  std::map<int, int> line_map;  // before line -> after line

  bool before_mapped(int line) const { return line_map.count(line) > 0; }
  LineDiff inverted() const;
};

std::vector<std::string> split_lines(const std::string& text);

/// Minimal edit script via LCS. Ties in the alignment are broken on line
/// content so that diff_lines(a, b) is the exact mirror of diff_lines(b, a).
LineDiff diff_lines(const std::string& before, const std::string& after);

}  // namespace vf
