#pragma once

#include <cstdint>

#include <vf/corpus.hpp>

namespace vf {

/// Deterministic synthetic commit generator. Fix commits adjust the bound
/// check guarding a buffer write (or the loop bound). Non-fix commits are
/// benign edits (rename, statement swap, constant tweak, comparison tweak in
/// a plain assignment) plus two decoy tiers: the same bound-check edit on a
/// guard over a plain update (separable only through the guarded statement,
/// i.e. only with unchanged context) and on a guard over a mirror buffer
/// write (not separable at all). Every source parses and timestamps
/// strictly increase.
std::vector<CommitRecord> gen_synthetic(int n_fix, int n_nonfix, std::uint64_t seed);

/// Syntactic certificate: true iff some changed line intersects the
/// condition of an if/while/for in either version. Every fix satisfies it;
/// benign non-fixes do not; decoy-guard non-fixes do, by design.
bool guard_line_rule(const CommitRecord& rec);

}  // namespace vf
