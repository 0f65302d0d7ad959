// Corpus persistence, time splits, undersampling, synthetic generation.

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <vf/corpus.hpp>
#include <vf/errors.hpp>
#include <vf/parser.hpp>
#include <vf/synthetic.hpp>

#include "helpers.hpp"

using namespace vf;

namespace {

// Unique-ish temp path under the build tree's cwd.
std::string temp_path(const std::string& stem) {
  static int counter = 0;
  return "tmp_dataset_" + stem + "_" + std::to_string(counter++) + ".jsonl";
}

CommitRecord make_record(const std::string& id, std::int64_t ts, bool fix,
                         const std::string& before, const std::string& after) {
  CommitRecord rec;
  rec.commit_id = id;
  rec.timestamp = ts;
  rec.is_fix = fix;
  rec.files.push_back({"src/a.c", before, after});
  rec.changed_loc = count_changed_loc(rec);
  return rec;
}

bool records_equal(const CommitRecord& a, const CommitRecord& b) {
  if (a.commit_id != b.commit_id || a.timestamp != b.timestamp ||
      a.is_fix != b.is_fix || a.changed_loc != b.changed_loc ||
      a.files.size() != b.files.size())
    return false;
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    if (a.files[i].path != b.files[i].path || a.files[i].before != b.files[i].before ||
        a.files[i].after != b.files[i].after)
      return false;
  }
  return true;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("count_changed_loc sums deleted and added lines across files") {
  CommitRecord rec;
  rec.commit_id = "c";
  rec.files.push_back({"a.c", "int x;\nint y;\n", "int x;\nint z;\n"});
  // one deleted, one added
  CHECK(count_changed_loc(rec) == 2);
  rec.files.push_back({"b.c", "", "int w;\n"});
  CHECK(count_changed_loc(rec) == 3);
  rec.files.push_back({"c.c", "int q;\n", "int q;\n"});
  CHECK(count_changed_loc(rec) == 3);
}

TEST_CASE("corpus round-trips through plain JSONL") {
  std::vector<CommitRecord> corpus;
  corpus.push_back(make_record("r1", 100, true, fixtures::kBufBefore, fixtures::kBufAfter));
  corpus.push_back(make_record("r2", 200, false, "int a;\n", "int a;\n"));
  CommitRecord multi = make_record("r3", 300, false, "int a;\n", "int b;\n");
  multi.files.push_back({"src/b.c", "int c;\n", "int c;\nint d;\n"});
  multi.changed_loc = count_changed_loc(multi);
  corpus.push_back(multi);

  std::string path = temp_path("roundtrip");
  save_corpus(corpus, path);
  std::vector<CommitRecord> back = load_corpus(path);
  REQUIRE(back.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) CHECK(records_equal(corpus[i], back[i]));
  std::remove(path.c_str());
}

TEST_CASE("corpus round-trips through gzip when the path ends in .gz") {
  std::vector<CommitRecord> corpus;
  corpus.push_back(make_record("g1", 5, true, fixtures::kBufBefore, fixtures::kBufAfter));
  std::string path = temp_path("gzip") + ".gz";
  save_corpus(corpus, path);

  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  unsigned char magic[2] = {0, 0};
  in.read(reinterpret_cast<char*>(magic), 2);
  CHECK(magic[0] == 0x1f);
  CHECK(magic[1] == 0x8b);
  in.close();

  std::vector<CommitRecord> back = load_corpus(path);
  REQUIRE(back.size() == 1);
  CHECK(records_equal(corpus[0], back[0]));
  std::remove(path.c_str());
}

TEST_CASE("loader reports schema violations with line and field") {
  std::string path = temp_path("schema");
  const std::string good =
      R"({"commit_id":"ok","timestamp":1,"is_fix":false,"files":[{"path":"a.c","before":"int a;\n","after":"int a;\n"}],"changed_loc":0})";

  SUBCASE("invalid JSON") {
    write_text(path, good + "\nnot json at all\n");
    try {
      load_corpus(path);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(e.line == 2);
      CHECK(std::string(e.what()).find("not valid JSON") != std::string::npos);
    }
  }
  SUBCASE("missing field") {
    write_text(path,
               R"({"commit_id":"x","is_fix":false,"files":[{"path":"a.c","before":"","after":""}],"changed_loc":0})"
               "\n");
    try {
      load_corpus(path);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(e.line == 1);
      CHECK(e.field == "timestamp");
    }
  }
  SUBCASE("wrong type") {
    write_text(path,
               R"({"commit_id":"x","timestamp":1,"is_fix":"yes","files":[{"path":"a.c","before":"","after":""}],"changed_loc":0})"
               "\n");
    try {
      load_corpus(path);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(e.field == "is_fix");
    }
  }
  SUBCASE("duplicate commit id") {
    std::string dup = good;
    write_text(path, dup + "\n" + dup + "\n");
    try {
      load_corpus(path);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(e.line == 2);
      CHECK(e.field == "commit_id");
    }
  }
  SUBCASE("empty files array") {
    write_text(path,
               R"({"commit_id":"x","timestamp":1,"is_fix":false,"files":[],"changed_loc":0})"
               "\n");
    try {
      load_corpus(path);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(e.field == "files");
    }
  }
  SUBCASE("changed_loc disagrees with the diff") {
    write_text(path,
               R"({"commit_id":"x","timestamp":1,"is_fix":false,"files":[{"path":"a.c","before":"int a;\n","after":"int b;\n"}],"changed_loc":9})"
               "\n");
    try {
      load_corpus(path);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(e.field == "changed_loc");
      CHECK(std::string(e.what()).find("declared 9 but diff yields 2") != std::string::npos);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("time_split puts every train commit strictly before the cut") {
  std::vector<CommitRecord> corpus;
  for (int i = 0; i < 5; ++i)
    corpus.push_back(make_record("t" + std::to_string(i), 10 * (i + 1), i % 2 == 0,
                                 "int a;\n", "int a;\n"));
  Split s = time_split(corpus, 0.8);
  CHECK(s.train.size() == 4);
  CHECK(s.test.size() == 1);
  CHECK(s.cut == 50);
  std::int64_t max_train = 0;
  for (const CommitRecord& r : s.train) max_train = std::max(max_train, r.timestamp);
  std::int64_t min_test = s.test.front().timestamp;
  for (const CommitRecord& r : s.test) min_test = std::min(min_test, r.timestamp);
  CHECK(max_train < min_test);
  CHECK(min_test == s.cut);
  CHECK(s.train.size() + s.test.size() == corpus.size());
}

TEST_CASE("time_split keeps ties on one side of the cut") {
  std::vector<CommitRecord> corpus;
  // three commits share the boundary timestamp; none may straddle the cut
  std::vector<std::int64_t> stamps = {1, 2, 3, 3, 3, 9};
  for (std::size_t i = 0; i < stamps.size(); ++i)
    corpus.push_back(
        make_record("s" + std::to_string(i), stamps[i], false, "int a;\n", "int a;\n"));
  Split s = time_split(corpus, 0.5);
  for (const CommitRecord& r : s.train) CHECK(r.timestamp < s.cut);
  for (const CommitRecord& r : s.test) CHECK(r.timestamp >= s.cut);
  CHECK(s.train.size() + s.test.size() == corpus.size());
}

TEST_CASE("time_split rejects corpora it cannot split") {
  std::vector<CommitRecord> corpus;
  CHECK_THROWS_AS(time_split(corpus, 0.8), DegenerateSplit);
  for (int i = 0; i < 4; ++i)
    corpus.push_back(make_record("u" + std::to_string(i), 42, false, "int a;\n", "int a;\n"));
  CHECK_THROWS_AS(time_split(corpus, 0.5), DegenerateSplit);
  corpus.back().timestamp = 43;
  CHECK_THROWS_AS(time_split(corpus, 0.0), DegenerateSplit);
  CHECK_THROWS_AS(time_split(corpus, 1.0), DegenerateSplit);
}

TEST_CASE("undersample balances classes and preserves order") {
  std::vector<CommitRecord> corpus;
  for (int i = 0; i < 13; ++i)
    corpus.push_back(make_record("m" + std::to_string(i), i, i % 4 == 0,
                                 "int a;\n", "int a;\n"));
  // 4 fixes (0,4,8,12) and 9 non-fixes
  std::vector<CommitRecord> bal = undersample(corpus, 7);
  int fixes = 0, nonfixes = 0;
  for (const CommitRecord& r : bal) (r.is_fix ? fixes : nonfixes)++;
  CHECK(fixes == 4);
  CHECK(nonfixes == 4);

  // every fix kept, original relative order preserved
  std::vector<std::string> ids;
  for (const CommitRecord& r : bal) ids.push_back(r.commit_id);
  std::vector<std::string> sorted_by_input;
  for (const CommitRecord& r : corpus)
    if (std::find(ids.begin(), ids.end(), r.commit_id) != ids.end())
      sorted_by_input.push_back(r.commit_id);
  CHECK(ids == sorted_by_input);
  for (const CommitRecord& r : corpus)
    if (r.is_fix) CHECK(std::find(ids.begin(), ids.end(), r.commit_id) != ids.end());

  // deterministic in the seed
  std::vector<CommitRecord> again = undersample(corpus, 7);
  REQUIRE(again.size() == bal.size());
  for (std::size_t i = 0; i < bal.size(); ++i) CHECK(records_equal(bal[i], again[i]));
}

TEST_CASE("undersample keeps everything when non-fixes are scarce") {
  std::vector<CommitRecord> corpus;
  for (int i = 0; i < 6; ++i)
    corpus.push_back(make_record("k" + std::to_string(i), i, i != 3,
                                 "int a;\n", "int a;\n"));
  std::vector<CommitRecord> bal = undersample(corpus, 1);
  CHECK(bal.size() == corpus.size());
}

TEST_CASE("synthetic corpus is well formed") {
  std::vector<CommitRecord> corpus = gen_synthetic(50, 50, 7);
  REQUIRE(corpus.size() == 100);

  int fixes = 0;
  std::set<std::string> ids;
  std::int64_t prev_ts = -1;
  for (const CommitRecord& rec : corpus) {
    if (rec.is_fix) ++fixes;
    CHECK(ids.insert(rec.commit_id).second);
    CHECK(rec.commit_id.rfind("synth-", 0) == 0);
    CHECK(rec.commit_id.size() == 12);
    CHECK(rec.timestamp > prev_ts);
    prev_ts = rec.timestamp;
    CHECK(rec.changed_loc == count_changed_loc(rec));
    CHECK(rec.changed_loc > 0);
    REQUIRE(rec.files.size() == 1);
    CHECK_NOTHROW(parse_source(rec.files[0].before, VersionTag::Before));
    CHECK_NOTHROW(parse_source(rec.files[0].after, VersionTag::After));
  }
  CHECK(fixes == 50);

  // survives its own schema validation
  std::string path = temp_path("synth");
  save_corpus(corpus, path);
  CHECK(load_corpus(path).size() == 100);
  std::remove(path.c_str());
}

TEST_CASE("synthetic generation is deterministic in the seed") {
  std::vector<CommitRecord> a = gen_synthetic(20, 20, 11);
  std::vector<CommitRecord> b = gen_synthetic(20, 20, 11);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(records_equal(a[i], b[i]));

  std::vector<CommitRecord> c = gen_synthetic(20, 20, 12);
  bool differs = false;
  for (std::size_t i = 0; i < a.size() && !differs; ++i)
    differs = !records_equal(a[i], c[i]);
  CHECK(differs);
}

TEST_CASE("guard-line rule is a one-directional certificate") {
  std::vector<CommitRecord> corpus = gen_synthetic(80, 80, 3);
  int fix_hits = 0, fix_total = 0;
  int nonfix_hits = 0, nonfix_total = 0;
  for (const CommitRecord& rec : corpus) {
    bool hit = guard_line_rule(rec);
    if (rec.is_fix) {
      ++fix_total;
      if (hit) ++fix_hits;
    } else {
      ++nonfix_total;
      if (hit) ++nonfix_hits;
    }
  }
  // every fix touches a guard condition
  CHECK(fix_hits == fix_total);
  // benign edits exist that do not, and decoy edits exist that do
  CHECK(nonfix_hits > 0);
  CHECK(nonfix_hits < nonfix_total);
}
