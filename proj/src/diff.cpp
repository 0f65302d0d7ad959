#include <vf/diff.hpp>

namespace vf {

LineDiff LineDiff::inverted() const {
  LineDiff out;
  out.deleted = added;
  out.added = deleted;
  for (const auto& [b, a] : line_map) out.line_map.emplace(a, b);
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    std::size_t end = nl == std::string::npos ? text.size() : nl;
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return lines;
}

LineDiff diff_lines(const std::string& before, const std::string& after) {
  std::vector<std::string> a = split_lines(before);
  std::vector<std::string> b = split_lines(after);

  // Trim the common prefix and suffix so the DP only sees the changed core.
  std::size_t lo = 0;
  while (lo < a.size() && lo < b.size() && a[lo] == b[lo]) ++lo;
  std::size_t hi = 0;
  while (hi + lo < a.size() && hi + lo < b.size() &&
         a[a.size() - 1 - hi] == b[b.size() - 1 - hi])
    ++hi;

  std::size_t n = a.size() - lo - hi;
  std::size_t m = b.size() - lo - hi;

  std::vector<std::vector<int>> lcs(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      if (a[lo + i] == b[lo + j])
        lcs[i][j] = lcs[i + 1][j + 1] + 1;
      else
        lcs[i][j] = std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }

  LineDiff out;
  for (std::size_t k = 0; k < lo; ++k)
    out.line_map.emplace(static_cast<int>(k) + 1, static_cast<int>(k) + 1);

  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (a[lo + i] == b[lo + j]) {
      out.line_map.emplace(static_cast<int>(lo + i) + 1, static_cast<int>(lo + j) + 1);
      ++i;
      ++j;
    } else if (lcs[i + 1][j] > lcs[i][j + 1]) {
      out.deleted.insert(static_cast<int>(lo + i) + 1);
      ++i;
    } else if (lcs[i + 1][j] < lcs[i][j + 1]) {
      out.added.insert(static_cast<int>(lo + j) + 1);
      ++j;
    } else {
      // Equal subproblem values with unequal lines: either side may be
      // skipped. Choosing by content keeps the result symmetric in its
      // arguments.
      if (a[lo + i] < b[lo + j]) {
        out.deleted.insert(static_cast<int>(lo + i) + 1);
        ++i;
      } else {
        out.added.insert(static_cast<int>(lo + j) + 1);
        ++j;
      }
    }
  }
  while (i < n) {
    out.deleted.insert(static_cast<int>(lo + i) + 1);
    ++i;
  }
  while (j < m) {
    out.added.insert(static_cast<int>(lo + j) + 1);
    ++j;
  }

  for (std::size_t k = 0; k < hi; ++k) {
    out.line_map.emplace(static_cast<int>(a.size() - hi + k) + 1,
                         static_cast<int>(b.size() - hi + k) + 1);
  }
  return out;
}

}  // namespace vf
