#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <vf/errors.hpp>

namespace vf {

struct CommitFile {
  std::string path;
  std::string before;
  std::string after;
  bool operator==(const CommitFile&) const = default;
};

/// One labeled commit. changed_loc is the total of deleted plus added lines
/// over all files; load_corpus recomputes it and rejects records that
/// disagree.
struct CommitRecord {
  std::string commit_id;
  std::int64_t timestamp = 0;  // UTC seconds
  bool is_fix = false;
  std::vector<CommitFile> files;
  int changed_loc = 0;
  bool operator==(const CommitRecord&) const = default;
};

int count_changed_loc(const CommitRecord& rec);

/// Reads a JSONL corpus; a .gz path is inflated first. Throws SchemaError
/// with the offending line on malformed records, IoError if unreadable.
std::vector<CommitRecord> load_corpus(const std::string& path);

/// Writes JSONL, gzip-compressed when the path ends in .gz.
void save_corpus(const std::vector<CommitRecord>& corpus, const std::string& path);

struct Split {
  std::vector<CommitRecord> train;
  std::vector<CommitRecord> test;
  std::int64_t cut = 0;  // smallest timestamp of the test side
};

/// Chronological split: cut is the smallest timestamp for which commits
/// strictly before it reach train_ratio of the corpus; commits at the cut
/// fall into test. Throws DegenerateSplit when no such cut exists.
Split time_split(const std::vector<CommitRecord>& corpus, double train_ratio = 0.8);

/// Keeps every fix and a seeded without-replacement sample of non-fixes of
/// equal size, preserving corpus order. When non-fixes are scarcer than
/// fixes, keeps everything and warns on stderr.
std::vector<CommitRecord> undersample(const std::vector<CommitRecord>& corpus,
                                      std::uint64_t seed);

}  // namespace vf
