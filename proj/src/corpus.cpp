#include <vf/corpus.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <set>

#include <json.hpp>
#include <zlib.h>

#include <vf/diff.hpp>

namespace vf {
namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// gzopen reads plain files transparently, so one path serves both formats.
std::string read_file_maybe_gz(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open " + path);
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(n));
  bool bad = n < 0;
  gzclose(f);
  if (bad) throw IoError("error while reading " + path);
  return out;
}

void write_file_maybe_gz(const std::string& path, const std::string& content) {
  if (has_suffix(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (f == nullptr) throw IoError("cannot open " + path + " for writing");
    std::size_t off = 0;
    while (off < content.size()) {
      unsigned chunk = static_cast<unsigned>(
          std::min<std::size_t>(content.size() - off, 1u << 20));
      if (gzwrite(f, content.data() + off, chunk) != static_cast<int>(chunk)) {
        gzclose(f);
        throw IoError("error while writing " + path);
      }
      off += chunk;
    }
    if (gzclose(f) != Z_OK) throw IoError("error while closing " + path);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw IoError("error while writing " + path);
}

nlohmann::json require(const nlohmann::json& obj, const char* field, int line) {
  auto it = obj.find(field);
  if (it == obj.end()) throw SchemaError("missing field", line, field);
  return *it;
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  return rng() % n;  // slight modulo bias is irrelevant here
}

}  // namespace

int count_changed_loc(const CommitRecord& rec) {
  int total = 0;
  for (const CommitFile& f : rec.files) {
    LineDiff d = diff_lines(f.before, f.after);
    total += static_cast<int>(d.deleted.size() + d.added.size());
  }
  return total;
}

std::vector<CommitRecord> load_corpus(const std::string& path) {
  std::string content = read_file_maybe_gz(path);
  std::vector<CommitRecord> corpus;
  std::size_t start = 0;
  int line_no = 0;
  std::set<std::string> seen_ids;
  while (start < content.size()) {
    std::size_t nl = content.find('\n', start);
    std::size_t end = nl == std::string::npos ? content.size() : nl;
    std::string line = content.substr(start, end - start);
    start = nl == std::string::npos ? content.size() : nl + 1;
    ++line_no;
    if (line.empty() || line == "\r") continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw SchemaError("not valid JSON", line_no, "");
    if (!j.is_object()) throw SchemaError("record is not an object", line_no, "");

    CommitRecord rec;
    nlohmann::json id = require(j, "commit_id", line_no);
    if (!id.is_string() || id.get<std::string>().empty())
      throw SchemaError("must be a non-empty string", line_no, "commit_id");
    rec.commit_id = id.get<std::string>();
    if (!seen_ids.insert(rec.commit_id).second)
      throw SchemaError("duplicate commit_id " + rec.commit_id, line_no, "commit_id");

    nlohmann::json ts = require(j, "timestamp", line_no);
    if (!ts.is_number_integer())
      throw SchemaError("must be an integer", line_no, "timestamp");
    rec.timestamp = ts.get<std::int64_t>();

    nlohmann::json fix = require(j, "is_fix", line_no);
    if (!fix.is_boolean()) throw SchemaError("must be a boolean", line_no, "is_fix");
    rec.is_fix = fix.get<bool>();

    nlohmann::json files = require(j, "files", line_no);
    if (!files.is_array() || files.empty())
      throw SchemaError("must be a non-empty array", line_no, "files");
    for (const nlohmann::json& fj : files) {
      if (!fj.is_object()) throw SchemaError("file entry is not an object", line_no, "files");
      CommitFile cf;
      nlohmann::json p = require(fj, "path", line_no);
      nlohmann::json b = require(fj, "before", line_no);
      nlohmann::json a = require(fj, "after", line_no);
      if (!p.is_string() || !b.is_string() || !a.is_string())
        throw SchemaError("path, before, after must be strings", line_no, "files");
      cf.path = p.get<std::string>();
      cf.before = b.get<std::string>();
      cf.after = a.get<std::string>();
      rec.files.push_back(std::move(cf));
    }

    nlohmann::json loc = require(j, "changed_loc", line_no);
    if (!loc.is_number_integer())
      throw SchemaError("must be an integer", line_no, "changed_loc");
    rec.changed_loc = loc.get<int>();
    int actual = count_changed_loc(rec);
    if (actual != rec.changed_loc)
      throw SchemaError("declared " + std::to_string(rec.changed_loc) +
                            " but diff yields " + std::to_string(actual),
                        line_no, "changed_loc");
    corpus.push_back(std::move(rec));
  }
  return corpus;
}

void save_corpus(const std::vector<CommitRecord>& corpus, const std::string& path) {
  std::string out;
  for (const CommitRecord& rec : corpus) {
    nlohmann::json files = nlohmann::json::array();
    for (const CommitFile& f : rec.files)
      files.push_back({{"path", f.path}, {"before", f.before}, {"after", f.after}});
    nlohmann::json j = {{"commit_id", rec.commit_id},
                        {"timestamp", rec.timestamp},
                        {"is_fix", rec.is_fix},
                        {"files", files},
                        {"changed_loc", rec.changed_loc}};
    out += j.dump();
    out += '\n';
  }
  write_file_maybe_gz(path, out);
}

Split time_split(const std::vector<CommitRecord>& corpus, double train_ratio) {
  if (corpus.empty()) throw DegenerateSplit("empty corpus");
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw DegenerateSplit("train_ratio must lie strictly between 0 and 1");
  std::vector<std::int64_t> stamps;
  stamps.reserve(corpus.size());
  for (const CommitRecord& r : corpus) stamps.push_back(r.timestamp);
  std::sort(stamps.begin(), stamps.end());
  stamps.erase(std::unique(stamps.begin(), stamps.end()), stamps.end());

  double n = static_cast<double>(corpus.size());
  std::int64_t cut = 0;
  bool found = false;
  for (std::int64_t c : stamps) {
    std::size_t train_count = 0;
    for (const CommitRecord& r : corpus)
      if (r.timestamp < c) ++train_count;
    if (static_cast<double>(train_count) / n >= train_ratio) {
      cut = c;
      found = true;
      break;
    }
  }
  if (!found)
    throw DegenerateSplit("no timestamp splits off the requested train fraction");

  Split split;
  split.cut = cut;
  for (const CommitRecord& r : corpus) {
    if (r.timestamp < cut)
      split.train.push_back(r);
    else
      split.test.push_back(r);
  }
  return split;
}

std::vector<CommitRecord> undersample(const std::vector<CommitRecord>& corpus,
                                      std::uint64_t seed) {
  std::vector<std::size_t> nonfix;
  std::size_t fixes = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].is_fix)
      ++fixes;
    else
      nonfix.push_back(i);
  }
  if (nonfix.size() <= fixes) {
    if (nonfix.size() < fixes)
      std::cerr << "undersample: only " << nonfix.size() << " non-fixes for "
                << fixes << " fixes; keeping everything\n";
    return corpus;
  }
  // partial Fisher-Yates, deterministic across standard libraries
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < fixes; ++k) {
    std::size_t j = k + static_cast<std::size_t>(bounded(rng, nonfix.size() - k));
    std::swap(nonfix[k], nonfix[j]);
  }
  std::set<std::size_t> chosen(nonfix.begin(), nonfix.begin() + static_cast<long>(fixes));
  std::vector<CommitRecord> out;
  out.reserve(fixes * 2);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (corpus[i].is_fix || chosen.count(i)) out.push_back(corpus[i]);
  return out;
}

}  // namespace vf
