#include <vf/parser.hpp>

#include <cctype>
#include <set>
#include <utility>

namespace vf {
namespace {

enum class TokType : std::uint8_t { Ident, Keyword, IntLit, CharLit, StrLit, Punct, End };

struct Token {
  TokType type = TokType::End;
  std::string text;
  int line = 1;
  int col = 1;
};

const std::set<std::string> kKeywords = {
    "void", "char", "short", "int", "long", "float", "double", "unsigned",
    "signed", "const", "if", "else", "while", "for", "return", "break",
    "continue",
};

const std::set<std::string> kTypeKeywords = {
    "void", "char", "short", "int", "long", "float", "double", "unsigned",
    "signed", "const",
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space_and_comments();
      if (pos_ >= src_.size()) break;
      out.push_back(next_token());
    }
    out.push_back({TokType::End, "", line_, col_});
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, line_, col_); }

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  char advance() {
    char c = src_[pos_++];
    if (c == '\n') { ++line_; col_ = 1; } else { ++col_; }
    return c;
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) { advance(); continue; }
      if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && peek() != '\n') advance();
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        advance(); advance();
        while (pos_ < src_.size() && !(peek() == '*' && peek(1) == '/')) advance();
        if (pos_ >= src_.size()) fail("unterminated block comment");
        advance(); advance();
        continue;
      }
      break;
    }
  }

  Token next_token() {
    int line = line_, col = col_;
    char c = peek();
    if (c == '#') fail("preprocessor directives are not supported");
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string text;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')
        text += advance();
      TokType t = kKeywords.count(text) ? TokType::Keyword : TokType::Ident;
      return {t, std::move(text), line, col};
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string text;
      while (std::isdigit(static_cast<unsigned char>(peek()))) text += advance();
      if (peek() == '.' || peek() == 'x' || peek() == 'X')
        fail("only decimal integer literals are supported");
      return {TokType::IntLit, std::move(text), line, col};
    }
    if (c == '\'' || c == '"') {
      char quote = advance();
      std::string text(1, quote);
      while (pos_ < src_.size() && peek() != quote && peek() != '\n') {
        if (peek() == '\\') text += advance();
        if (pos_ >= src_.size()) break;
        text += advance();
      }
      if (peek() != quote) fail("unterminated literal");
      text += advance();
      return {quote == '\'' ? TokType::CharLit : TokType::StrLit, std::move(text),
              line, col};
    }
    static const char* two_char[] = {"==", "!=", "<=", ">=", "&&", "||", "++", "--"};
    for (const char* op : two_char) {
      if (c == op[0] && peek(1) == op[1]) {
        advance(); advance();
        return {TokType::Punct, op, line, col};
      }
    }
    if (std::string("(){}[];,=<>+-*/%!&").find(c) != std::string::npos) {
      advance();
      return {TokType::Punct, std::string(1, c), line, col};
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

/// Builds nodes into a flat pool with temporary ids, then renumbers preorder.
class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Ast run(VersionTag version) {
    NodeId root = parse_translation_unit();
    return renumber(root, version);
  }

 private:
  // --- token helpers ---------------------------------------------------

  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(std::size_t n) const {
    return toks_[std::min(pos_ + n, toks_.size() - 1)];
  }
  bool at_end() const { return cur().type == TokType::End; }

  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(msg, cur().line, cur().col);
  }

  bool is_punct(const std::string& p) const {
    return cur().type == TokType::Punct && cur().text == p;
  }
  bool is_kw(const std::string& k) const {
    return cur().type == TokType::Keyword && cur().text == k;
  }
  bool at_type() const {
    return cur().type == TokType::Keyword && kTypeKeywords.count(cur().text) > 0;
  }

  int eat() { return static_cast<int>(pos_++); }

  void expect_punct(const std::string& p) {
    if (!is_punct(p)) fail("expected '" + p + "'");
    eat();
  }

  // --- node pool --------------------------------------------------------

  NodeId make(NodeKind kind, std::string label, int tok_begin) {
    AstNode n;
    n.id = static_cast<NodeId>(pool_.size());
    n.kind = kind;
    n.label = std::move(label);
    n.tok_begin = tok_begin;
    n.tok_end = tok_begin;
    pool_.push_back(std::move(n));
    return pool_.back().id;
  }

  AstNode& at(NodeId id) { return pool_[static_cast<std::size_t>(id)]; }

  void attach(NodeId parent, NodeId child) { at(parent).children.push_back(child); }

  void close(NodeId id) {
    // token extent covers all children; end is exclusive
    AstNode& n = at(id);
    n.tok_end = static_cast<int>(pos_);
  }

  // --- grammar ----------------------------------------------------------

  NodeId parse_translation_unit() {
    NodeId tu = make(NodeKind::TranslationUnit, "", static_cast<int>(pos_));
    while (!at_end()) {
      parse_external(tu);
    }
    close(tu);
    return tu;
  }

  std::string parse_type_spec() {
    if (!at_type()) fail("expected a type");
    std::string text;
    bool saw_base = false;
    while (at_type()) {
      const std::string& t = cur().text;
      if (t == "const") { eat(); continue; }  // accepted, not recorded
      if (!text.empty()) text += ' ';
      text += t;
      if (t != "unsigned" && t != "signed") saw_base = true;
      eat();
      if (saw_base && t == "long" && is_kw("long")) continue;
      if (saw_base) break;
    }
    if (text.empty()) fail("expected a type");
    return text;
  }

  std::string parse_stars(std::string type_text) {
    while (is_punct("*")) { eat(); type_text += '*'; }
    return type_text;
  }

  std::string expect_name() {
    if (cur().type != TokType::Ident) fail("expected an identifier");
    std::string name = cur().text;
    eat();
    return name;
  }

  NodeId make_identifier() {
    if (cur().type != TokType::Ident) fail("expected an identifier");
    NodeId id = make(NodeKind::Identifier, cur().text, static_cast<int>(pos_));
    eat();
    close(id);
    return id;
  }

  void parse_external(NodeId tu) {
    int start = static_cast<int>(pos_);
    std::string type = parse_stars(parse_type_spec());
    if (cur().type != TokType::Ident) fail("expected a declarator");
    if (ahead(1).type == TokType::Punct && ahead(1).text == "(") {
      attach(tu, parse_function_def(type, start));
    } else {
      parse_declaration(tu, type, start, true);
    }
  }

  NodeId parse_function_def(const std::string& /*type*/, int start) {
    std::string name = expect_name();
    NodeId fn = make(NodeKind::FunctionDef, name, start);
    expect_punct("(");
    if (is_kw("void") && ahead(1).text == ")") eat();
    while (!is_punct(")")) {
      int pstart = static_cast<int>(pos_);
      std::string ptype = parse_stars(parse_type_spec());
      NodeId param = make(NodeKind::Param, ptype, pstart);
      attach(param, make_identifier());
      if (is_punct("[")) {
        eat();
        at(param).label += "[]";
        expect_punct("]");
      }
      close(param);
      attach(fn, param);
      if (is_punct(",")) { eat(); continue; }
      break;
    }
    expect_punct(")");
    if (!is_punct("{")) fail("expected a function body");
    attach(fn, parse_block());
    close(fn);
    return fn;
  }

  NodeId parse_block() {
    NodeId block = make(NodeKind::Block, "", static_cast<int>(pos_));
    expect_punct("{");
    while (!is_punct("}")) {
      if (at_end()) fail("unterminated block");
      parse_statement_into(block);
    }
    eat();  // }
    close(block);
    return block;
  }

  /// A declaration statement may carry several declarators; each becomes its
  /// own decl node so later passes can treat them independently.
  void parse_declaration(NodeId parent, const std::string& base_type, int start,
                         bool eat_semi) {
    bool first = true;
    while (true) {
      int dstart = first ? start : static_cast<int>(pos_);
      std::string type = base_type;
      if (!first) type = parse_stars(base_type);
      NodeId decl = make(NodeKind::Decl, type, dstart);
      attach(decl, make_identifier());
      if (is_punct("[")) {
        eat();
        at(decl).label += "[]";
        if (!is_punct("]")) attach(decl, parse_expr());
        expect_punct("]");
      }
      if (is_punct("=")) {
        eat();
        attach(decl, parse_expr());
      }
      close(decl);
      attach(parent, decl);
      first = false;
      if (is_punct(",")) { eat(); continue; }
      break;
    }
    if (eat_semi) expect_punct(";");
  }

  void parse_statement_into(NodeId block) {
    if (at_type()) {
      int start = static_cast<int>(pos_);
      std::string type = parse_stars(parse_type_spec());
      parse_declaration(block, type, start, true);
      return;
    }
    attach(block, parse_statement());
  }

  NodeId parse_statement() {
    if (is_punct("{")) return parse_block();
    if (is_kw("if")) return parse_if();
    if (is_kw("while")) return parse_while();
    if (is_kw("for")) return parse_for();
    if (is_kw("return")) return parse_return();
    if (is_kw("break") || is_kw("continue")) {
      NodeKind k = is_kw("break") ? NodeKind::BreakStmt : NodeKind::ContinueStmt;
      NodeId n = make(k, "", static_cast<int>(pos_));
      eat();
      expect_punct(";");
      close(n);
      return n;
    }
    if (at_type()) {
      // declarations in unbraced bodies reach here
      NodeId block = make(NodeKind::Block, "", static_cast<int>(pos_));
      parse_statement_into(block);
      close(block);
      return at(block).children.size() == 1 ? at(block).children[0] : block;
    }
    NodeId stmt = parse_assign_or_call(true);
    expect_punct(";");
    // extent must include the semicolon
    at(stmt).tok_end = static_cast<int>(pos_);
    return stmt;
  }

  /// Wraps an unbraced body in a block so control structure is uniform.
  NodeId parse_body() {
    if (is_punct("{")) return parse_block();
    NodeId block = make(NodeKind::Block, "", static_cast<int>(pos_));
    attach(block, parse_statement());
    close(block);
    return block;
  }

  NodeId parse_if() {
    NodeId n = make(NodeKind::IfStmt, "", static_cast<int>(pos_));
    eat();  // if
    expect_punct("(");
    attach(n, parse_expr());
    expect_punct(")");
    attach(n, parse_body());
    if (is_kw("else")) {
      eat();
      if (is_kw("if")) {
        NodeId block = make(NodeKind::Block, "", static_cast<int>(pos_));
        attach(block, parse_if());
        close(block);
        attach(n, block);
      } else {
        attach(n, parse_body());
      }
    }
    close(n);
    return n;
  }

  NodeId parse_while() {
    NodeId n = make(NodeKind::WhileStmt, "", static_cast<int>(pos_));
    eat();
    expect_punct("(");
    attach(n, parse_expr());
    expect_punct(")");
    attach(n, parse_body());
    close(n);
    return n;
  }

  NodeId parse_for() {
    NodeId n = make(NodeKind::ForStmt, "", static_cast<int>(pos_));
    eat();
    expect_punct("(");
    if (at_type()) {
      int start = static_cast<int>(pos_);
      std::string type = parse_stars(parse_type_spec());
      parse_declaration(n, type, start, false);
    } else {
      attach(n, parse_assign_or_call(false));
    }
    expect_punct(";");
    attach(n, parse_expr());
    expect_punct(";");
    attach(n, parse_assign_or_call(false));
    expect_punct(")");
    attach(n, parse_body());
    close(n);
    return n;
  }

  NodeId parse_return() {
    NodeId n = make(NodeKind::ReturnStmt, "", static_cast<int>(pos_));
    eat();
    if (!is_punct(";")) attach(n, parse_expr());
    expect_punct(";");
    close(n);
    return n;
  }

  /// Assignment, increment/decrement, or bare call. Assignment is a
  /// statement form here, not an expression, which keeps `if (x = 1)` out of
  /// the subset.
  NodeId parse_assign_or_call(bool allow_call) {
    int start = static_cast<int>(pos_);
    NodeId lhs = parse_postfix();
    if (is_punct("=")) {
      NodeId n = make(NodeKind::Assign, "=", start);
      eat();
      attach(n, lhs);
      attach(n, parse_expr());
      close(n);
      return n;
    }
    if (is_punct("++") || is_punct("--")) {
      NodeId n = make(NodeKind::Assign, cur().text, start);
      eat();
      attach(n, lhs);
      close(n);
      return n;
    }
    if (at(lhs).kind == NodeKind::CallExpr && allow_call) return lhs;
    fail("expected '=', '++', '--', or a call");
  }

  // expressions, lowest precedence first
  NodeId parse_expr() { return parse_binary(0); }

  static int binary_level(const std::string& op) {
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "==" || op == "!=") return 3;
    if (op == "<" || op == ">" || op == "<=" || op == ">=") return 4;
    if (op == "+" || op == "-") return 5;
    if (op == "*" || op == "/" || op == "%") return 6;
    return 0;
  }

  NodeId parse_binary(int min_level) {
    int start = static_cast<int>(pos_);
    NodeId lhs = parse_unary();
    while (cur().type == TokType::Punct) {
      int level = binary_level(cur().text);
      if (level == 0 || level < min_level) break;
      std::string op = cur().text;
      NodeId n = make(NodeKind::BinaryExpr, op, start);
      eat();
      attach(n, lhs);
      attach(n, parse_binary(level + 1));
      close(n);
      lhs = n;
    }
    return lhs;
  }

  NodeId parse_unary() {
    if (is_punct("-") || is_punct("!")) {
      NodeId n = make(NodeKind::UnaryExpr, cur().text, static_cast<int>(pos_));
      eat();
      attach(n, parse_unary());
      close(n);
      return n;
    }
    return parse_postfix();
  }

  NodeId parse_postfix() {
    int start = static_cast<int>(pos_);
    NodeId base = parse_primary();
    while (true) {
      if (is_punct("(")) {
        NodeId call = make(NodeKind::CallExpr, "", start);
        attach(call, base);
        eat();
        while (!is_punct(")")) {
          attach(call, parse_expr());
          if (is_punct(",")) { eat(); continue; }
          break;
        }
        expect_punct(")");
        close(call);
        base = call;
        continue;
      }
      if (is_punct("[")) {
        NodeId sub = make(NodeKind::SubscriptExpr, "", start);
        attach(sub, base);
        eat();
        attach(sub, parse_expr());
        expect_punct("]");
        close(sub);
        base = sub;
        continue;
      }
      break;
    }
    return base;
  }

  NodeId parse_primary() {
    if (cur().type == TokType::Ident) return make_identifier();
    if (cur().type == TokType::IntLit || cur().type == TokType::CharLit ||
        cur().type == TokType::StrLit) {
      NodeId n = make(NodeKind::Literal, cur().text, static_cast<int>(pos_));
      eat();
      close(n);
      return n;
    }
    if (is_punct("(")) {
      eat();
      NodeId inner = parse_expr();
      expect_punct(")");
      return inner;
    }
    fail("expected an expression");
  }

  // --- finalization -----------------------------------------------------

  void preorder(NodeId at_id, std::vector<NodeId>& order) const {
    order.push_back(at_id);
    for (NodeId c : pool_[static_cast<std::size_t>(at_id)].children)
      preorder(c, order);
  }

  Ast renumber(NodeId root, VersionTag version) {
    std::vector<NodeId> order;
    preorder(root, order);
    std::vector<NodeId> remap(pool_.size(), kNoNode);
    for (std::size_t i = 0; i < order.size(); ++i)
      remap[static_cast<std::size_t>(order[i])] = static_cast<NodeId>(i);

    Ast ast;
    ast.version = version;
    for (const Token& t : toks_)
      if (t.type != TokType::End) ast.token_lines.push_back(t.line);
    ast.nodes.resize(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      AstNode n = pool_[static_cast<std::size_t>(order[i])];
      n.id = static_cast<NodeId>(i);
      for (NodeId& c : n.children) c = remap[static_cast<std::size_t>(c)];
      if (n.tok_end > n.tok_begin) {
        n.span.start = ast.token_lines[static_cast<std::size_t>(n.tok_begin)];
        n.span.end = ast.token_lines[static_cast<std::size_t>(n.tok_end - 1)];
      } else {
        n.span = {1, 1};  // empty translation unit
      }
      ast.nodes[i] = std::move(n);
    }
    ast.root = 0;
    return ast;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<AstNode> pool_;
};

}  // namespace

Ast parse_source(const std::string& source, VersionTag version) {
  Lexer lexer(source);
  Parser parser(lexer.run());
  return parser.run(version);
}

}  // namespace vf
