#include <vf/synthetic.hpp>

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include <vf/ast.hpp>
#include <vf/diff.hpp>
#include <vf/parser.hpp>

namespace vf {
namespace {

struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}

  std::uint64_t next(std::uint64_t n) { return engine() % n; }

  int range(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  template <typename T>
  const T& pick(const std::vector<T>& pool) {
    return pool[static_cast<std::size_t>(next(pool.size()))];
  }

  bool chance(int percent) { return range(1, 100) <= percent; }
};

const std::vector<std::string> kFnNames = {"copy_data",  "move_block", "fill_buf",
                                           "sync_rows",  "pack_bytes", "store_span",
                                           "write_chunk", "copy_region"};
const std::vector<std::string> kSrcNames = {"src", "input", "in_buf", "source"};
const std::vector<std::string> kDstNames = {"dst", "output", "out_buf", "sink"};
const std::vector<std::string> kBufNames = {"buf", "tmp", "scratch", "local"};
const std::vector<std::string> kIdxNames = {"i", "j", "k", "pos"};
const std::vector<std::string> kLenNames = {"n", "len", "count", "size"};
const std::vector<std::string> kAccNames = {"acc", "total", "sum", "checksum"};
const std::vector<std::string> kScaleNames = {"scale", "step", "factor", "width"};
const std::vector<std::string> kFlagNames = {"flag", "ok", "valid", "bounded"};
const std::vector<std::string> kCapNames = {"BUF_SIZE", "MAX_LEN", "LIMIT", "CAPACITY",
                                            "BLOCK_MAX"};
const std::vector<std::string> kSpareNames = {"span", "left", "cursor", "budget"};

/// Bound-check shapes shared by the real guard and the look-alike comparison
/// inside a plain assignment.
struct Guard {
  std::string op;    // < or <=
  int bound = 0;     // index into the shapes below
};

std::string bound_text(int bound, const std::string& cap) {
  switch (bound) {
    case 0: return cap;
    case 1: return "2*" + cap;
    case 2: return cap + "+1";
    default: return cap + "-1";
  }
}

std::string guard_text(const Guard& g, const std::string& idx, const std::string& cap) {
  return idx + " " + g.op + " " + bound_text(g.bound, cap);
}

/// A fix-shaped mutation: toggle the operator or move the bound, the way a
/// bound-check patch would.
Guard mutate_guard(const Guard& g, Rng& rng) {
  Guard out = g;
  if (rng.chance(40)) {
    out.op = g.op == "<" ? "<=" : "<";
  } else {
    int next = rng.range(0, 3);
    if (next == g.bound) next = (next + 1) % 4;
    out.bound = next;
  }
  return out;
}

/// Every template carries, besides the real guard over the staging-buffer
/// write, two decoy guards with the same local shape: one over a plain
/// accumulator update (tells apart from a real fix only by the guarded
/// statement, i.e. only with unchanged context in the graph) and one over a
/// mirror buffer write (tells apart from a real fix by nothing the graph
/// encodes). Mutating a decoy is labeled non-fix, so the corpus has hard
/// negatives at two difficulty tiers instead of being perfectly separable.
struct Template {
  std::vector<std::string> lines;
  int guard_line = -1;       // the if that protects the buffer write
  int loop_line = -1;        // for or while header carrying the loop bound
  int acc_guard_line = -1;   // decoy if over a plain accumulator update
  int mirror_guard_line = -1;// decoy if over a second, mirror buffer write
  int flag_line = -1;        // assignment with a guard-shaped right side
  int dst_line = -1;         // swap partner for flag_line
  int scale_decl_line = -1;  // constant-tweak target
  Guard guard;
  Guard acc_guard;
  Guard mirror_guard;
  Guard flag_guard;
  std::string idx, cap, acc, scale, flag;
  std::vector<std::string> renameable;  // never appear in any condition
};

Template make_template(Rng& rng) {
  Template t;
  std::string fn = rng.pick(kFnNames);
  std::string src = rng.pick(kSrcNames);
  std::string dst = rng.pick(kDstNames);
  // buf and mirror share a pool but must differ inside one function
  std::size_t buf_i = static_cast<std::size_t>(rng.next(kBufNames.size()));
  std::size_t mir_i = static_cast<std::size_t>(rng.next(kBufNames.size() - 1));
  if (mir_i >= buf_i) ++mir_i;
  const std::string& buf = kBufNames[buf_i];
  const std::string& mirror = kBufNames[mir_i];
  t.idx = rng.pick(kIdxNames);
  std::string len = rng.pick(kLenNames);
  t.acc = rng.pick(kAccNames);
  t.scale = rng.pick(kScaleNames);
  t.flag = rng.pick(kFlagNames);
  t.cap = rng.pick(kCapNames);
  t.guard = {rng.chance(50) ? "<" : "<=", rng.range(0, 3)};
  t.acc_guard = {rng.chance(50) ? "<" : "<=", rng.range(0, 3)};
  t.mirror_guard = {rng.chance(50) ? "<" : "<=", rng.range(0, 3)};
  t.flag_guard = {rng.chance(50) ? "<" : "<=", rng.range(0, 3)};
  bool use_while = rng.chance(30);
  bool read_flag = rng.chance(40);
  int extra_decls = rng.range(0, 2);
  int scale_k = rng.range(2, 9);

  auto& L = t.lines;
  if (rng.chance(20)) {
    std::string spare = rng.pick(kSpareNames);
    L.push_back("int next_" + fn + "(int " + spare + ") {");
    L.push_back("  return " + spare + " + 1;");
    L.push_back("}");
  }
  L.push_back("int " + fn + "(char *" + src + ", char *" + dst + ", int " + len + ") {");
  L.push_back("  char " + buf + "[" + t.cap + "];");
  L.push_back("  char " + mirror + "[" + t.cap + "];");
  L.push_back("  int " + t.acc + " = 0;");
  t.scale_decl_line = static_cast<int>(L.size());
  L.push_back("  int " + t.scale + " = " + std::to_string(scale_k) + ";");
  L.push_back("  int " + t.flag + " = 0;");
  std::vector<std::string> extras;
  for (int e = 0; e < extra_decls; ++e) {
    std::string name = "f" + std::to_string(e + 2) + "_" + rng.pick(kSpareNames);
    extras.push_back(name);
    L.push_back("  int " + name + " = " + std::to_string(rng.range(1, 9)) + ";");
  }
  if (use_while) {
    L.push_back("  int " + t.idx + " = 0;");
    t.loop_line = static_cast<int>(L.size());
    L.push_back("  while (" + t.idx + " < " + len + ") {");
  } else {
    t.loop_line = static_cast<int>(L.size());
    L.push_back("  for (int " + t.idx + " = 0; " + t.idx + " < " + len + "; " + t.idx +
                " = " + t.idx + " + 1) {");
  }
  t.guard_line = static_cast<int>(L.size());
  L.push_back("    if (" + guard_text(t.guard, t.idx, t.cap) + ")");
  L.push_back("      " + buf + "[" + t.idx + "] = " + src + "[" + t.idx + "];");
  t.acc_guard_line = static_cast<int>(L.size());
  L.push_back("    if (" + guard_text(t.acc_guard, t.idx, t.cap) + ")");
  L.push_back("      " + t.acc + " = " + t.acc + " + " + t.scale + ";");
  t.mirror_guard_line = static_cast<int>(L.size());
  L.push_back("    if (" + guard_text(t.mirror_guard, t.idx, t.cap) + ")");
  L.push_back("      " + mirror + "[" + t.idx + "] = " + src + "[" + t.idx + "];");
  t.dst_line = static_cast<int>(L.size());
  L.push_back("    " + dst + "[" + t.idx + "] = " + buf + "[" + t.idx + "];");
  t.flag_line = static_cast<int>(L.size());
  L.push_back("    " + t.flag + " = " + guard_text(t.flag_guard, t.idx, t.cap) + ";");
  if (read_flag)
    L.push_back("    " + t.acc + " = " + t.acc + " + " + t.flag + ";");
  for (const std::string& name : extras)
    L.push_back("    " + name + " = " + name + " + 1;");
  if (use_while)
    L.push_back("    " + t.idx + " = " + t.idx + " + 1;");
  L.push_back("  }");
  L.push_back("  return " + t.acc + ";");
  L.push_back("}");

  t.renameable.push_back(t.acc);
  t.renameable.push_back(t.scale);
  t.renameable.push_back(t.flag);
  for (const std::string& name : extras) t.renameable.push_back(name);
  return t;
}

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const std::string& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string rename_in_line(const std::string& line, const std::string& from,
                           const std::string& to) {
  std::string out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    std::size_t hit = line.find(from, pos);
    if (hit == std::string::npos) {
      out += line.substr(pos);
      break;
    }
    bool left_ok = hit == 0 || !ident_char(line[hit - 1]);
    bool right_ok = hit + from.size() >= line.size() || !ident_char(line[hit + from.size()]);
    out += line.substr(pos, hit - pos);
    if (left_ok && right_ok) {
      out += to;
    } else {
      out += from;
    }
    pos = hit + from.size();
  }
  return out;
}

std::vector<std::string> apply_fix(const Template& t, Rng& rng) {
  std::vector<std::string> after = t.lines;
  if (rng.chance(10)) {
    // loop-bound tweak: the loop condition is a guard too
    std::string& line = after[static_cast<std::size_t>(t.loop_line)];
    std::size_t lt = line.find(" < ");
    line = line.substr(0, lt) + " <= " + line.substr(lt + 3);
  } else {
    Guard next = mutate_guard(t.guard, rng);
    after[static_cast<std::size_t>(t.guard_line)] =
        "    if (" + guard_text(next, t.idx, t.cap) + ")";
  }
  return after;
}

std::vector<std::string> apply_nonfix(const Template& t, Rng& rng) {
  std::vector<std::string> after = t.lines;
  int roll = rng.range(1, 100);
  if (roll <= 25) {
    // rename a variable that never appears in a condition
    const std::string& from = rng.pick(t.renameable);
    std::string to = rng.pick(kSpareNames) + std::to_string(rng.range(2, 99));
    for (std::string& line : after) line = rename_in_line(line, from, to);
  } else if (roll <= 45) {
    // swap two adjacent independent statements
    std::swap(after[static_cast<std::size_t>(t.dst_line)],
              after[static_cast<std::size_t>(t.flag_line)]);
  } else if (roll <= 60) {
    // tweak a constant in a declaration, away from every guard
    std::string& line = after[static_cast<std::size_t>(t.scale_decl_line)];
    line = "  int " + t.scale + " = " + std::to_string(rng.range(10, 99)) + ";";
  } else if (roll <= 75) {
    // fix-shaped edit of the comparison inside a plain assignment
    Guard next = mutate_guard(t.flag_guard, rng);
    after[static_cast<std::size_t>(t.flag_line)] =
        "    " + t.flag + " = " + guard_text(next, t.idx, t.cap) + ";";
  } else if (roll <= 90) {
    // decoy guard over a plain update: a fix look-alike whose guarded
    // statement, not the edit itself, is the tell
    Guard next = mutate_guard(t.acc_guard, rng);
    after[static_cast<std::size_t>(t.acc_guard_line)] =
        "    if (" + guard_text(next, t.idx, t.cap) + ")";
  } else {
    // decoy guard over the mirror buffer write: indistinguishable from a
    // real fix by structure, so labels stay noisy at any class ratio
    Guard next = mutate_guard(t.mirror_guard, rng);
    after[static_cast<std::size_t>(t.mirror_guard_line)] =
        "    if (" + guard_text(next, t.idx, t.cap) + ")";
  }
  return after;
}

void collect_condition_lines(const Ast& ast, std::set<int>& out) {
  for (const AstNode& n : ast.nodes) {
    NodeId cond = kNoNode;
    if (n.kind == NodeKind::IfStmt || n.kind == NodeKind::WhileStmt) {
      cond = n.children[0];
    } else if (n.kind == NodeKind::ForStmt) {
      cond = n.children[n.children.size() - 3];
    } else {
      continue;
    }
    const AstNode& c = ast.node(cond);
    for (int tok = c.tok_begin; tok < c.tok_end; ++tok)
      out.insert(ast.token_lines[static_cast<std::size_t>(tok)]);
  }
}

}  // namespace

bool guard_line_rule(const CommitRecord& rec) {
  for (const CommitFile& f : rec.files) {
    LineDiff d = diff_lines(f.before, f.after);
    std::set<int> before_conds, after_conds;
    collect_condition_lines(parse_source(f.before, VersionTag::Before), before_conds);
    collect_condition_lines(parse_source(f.after, VersionTag::After), after_conds);
    for (int line : d.deleted)
      if (before_conds.count(line)) return true;
    for (int line : d.added)
      if (after_conds.count(line)) return true;
  }
  return false;
}

std::vector<CommitRecord> gen_synthetic(int n_fix, int n_nonfix, std::uint64_t seed) {
  Rng rng(seed);
  int total = n_fix + n_nonfix;
  std::vector<char> is_fix(static_cast<std::size_t>(total), 0);
  for (int i = 0; i < n_fix; ++i) is_fix[static_cast<std::size_t>(i)] = 1;
  for (int i = 0; i < total - 1; ++i) {
    int j = i + static_cast<int>(rng.next(static_cast<std::uint64_t>(total - i)));
    std::swap(is_fix[static_cast<std::size_t>(i)], is_fix[static_cast<std::size_t>(j)]);
  }

  std::vector<CommitRecord> corpus;
  corpus.reserve(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    Template t = make_template(rng);
    std::vector<std::string> after =
        is_fix[static_cast<std::size_t>(i)] ? apply_fix(t, rng) : apply_nonfix(t, rng);

    CommitRecord rec;
    std::ostringstream id;
    id << "synth-" << std::setfill('0') << std::setw(6) << i;
    rec.commit_id = id.str();
    rec.timestamp = 1500000000ll + static_cast<std::int64_t>(i) * 86400ll;
    rec.is_fix = is_fix[static_cast<std::size_t>(i)] != 0;
    rec.files.push_back({"src/module.c", join(t.lines), join(after)});
    rec.changed_loc = count_changed_loc(rec);
    corpus.push_back(std::move(rec));
  }
  return corpus;
}

}  // namespace vf
