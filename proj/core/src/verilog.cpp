#include "tpugen/verilog.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace tpugen {
namespace {

// ---------------------------------------------------------------------------
// lexer

struct Tok {
  enum class K { Ident, Number, Str, Punct, End };
  K k = K::End;
  std::string text;
  u128 num = 0;
  int width = 0;  // sized literal width, 0 if unsized
  int line = 1, col = 1;
  size_t off = 0, end = 0;  // byte range in the source
};

const std::set<std::string, std::less<>>& keyword_set() {
  // gate primitives (and/or/not/...) are deliberately absent so they parse
  // as ordinary instantiations
  static const std::set<std::string, std::less<>> kw = {
      "module", "endmodule", "input",  "output", "inout",   "wire",    "reg",
      "integer", "parameter", "localparam", "assign", "always", "initial",
      "begin",  "end",       "if",     "else",   "case",    "casez",   "casex",
      "endcase", "default",  "for",    "while",  "posedge", "negedge",
      "generate", "endgenerate", "genvar", "function", "endfunction", "task",
      "endtask", "fork", "join", "signed", "unsigned"};
  return kw;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }

int base_of(char c) {
  switch (std::tolower(static_cast<unsigned char>(c))) {
    case 'b': return 2;
    case 'o': return 8;
    case 'd': return 10;
    case 'h': return 16;
    default: return 0;
  }
}

int digit_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (c >= 'a' && c <= 'f') return 10 + (c - 'a');
  return -1;
}

std::vector<Tok> lex(const std::string& src) {
  std::vector<Tok> out;
  size_t pos = 0;
  int line = 1, col = 1;
  auto bump = [&](size_t n) {
    for (size_t i = 0; i < n; ++i) {
      if (src[pos + i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    pos += n;
  };

  static const char* kPunct2[] = {"<=", ">=", "==", "!=", "&&", "||", "<<", ">>"};

  while (pos < src.size()) {
    char c = src[pos];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      bump(1);
      continue;
    }
    if (c == '/' && pos + 1 < src.size() && src[pos + 1] == '/') {
      while (pos < src.size() && src[pos] != '\n') bump(1);
      continue;
    }
    if (c == '/' && pos + 1 < src.size() && src[pos + 1] == '*') {
      bump(2);
      while (pos + 1 < src.size() && !(src[pos] == '*' && src[pos + 1] == '/')) bump(1);
      if (pos + 1 >= src.size()) throw VerilogError("unterminated block comment", line, col);
      bump(2);
      continue;
    }

    Tok t;
    t.line = line;
    t.col = col;
    t.off = pos;

    if (ident_start(c)) {
      size_t n = 1;
      while (pos + n < src.size() && ident_char(src[pos + n])) ++n;
      t.k = Tok::K::Ident;
      t.text = src.substr(pos, n);
      bump(n);
      t.end = pos;
      out.push_back(std::move(t));
      continue;
    }

    if (std::isdigit(static_cast<unsigned char>(c))) {
      u128 dec = 0;
      size_t n = 0;
      while (pos + n < src.size() &&
             (std::isdigit(static_cast<unsigned char>(src[pos + n])) || src[pos + n] == '_')) {
        if (src[pos + n] != '_') dec = dec * 10 + static_cast<u128>(src[pos + n] - '0');
        ++n;
      }
      t.k = Tok::K::Number;
      if (pos + n < src.size() && src[pos + n] == '\'') {
        ++n;
        if (pos + n < src.size() && (src[pos + n] == 's' || src[pos + n] == 'S')) ++n;
        int base = pos + n < src.size() ? base_of(src[pos + n]) : 0;
        if (base == 0) throw VerilogError("bad literal base", line, col);
        ++n;
        if (dec == 0 || dec > 128) throw VerilogError("bad literal size", line, col);
        u128 v = 0;
        size_t digits = 0;
        while (pos + n < src.size() && (digit_val(src[pos + n]) >= 0 || src[pos + n] == '_')) {
          char d = src[pos + n];
          if (d != '_') {
            int dv = digit_val(d);
            if (dv >= base) throw VerilogError("digit out of base range", line, col);
            v = v * static_cast<u128>(base) + static_cast<u128>(dv);
            ++digits;
          }
          ++n;
        }
        if (digits == 0) throw VerilogError("literal has no digits", line, col);
        t.num = v;
        t.width = static_cast<int>(dec);
      } else {
        t.num = dec;
        t.width = 0;
      }
      t.text = src.substr(pos, n);
      bump(n);
      t.end = pos;
      out.push_back(std::move(t));
      continue;
    }

    if (c == '"') {
      size_t n = 1;
      while (pos + n < src.size() && src[pos + n] != '"') {
        if (src[pos + n] == '\\') ++n;
        if (src[pos + n] == '\n') throw VerilogError("newline in string", line, col);
        ++n;
      }
      if (pos + n >= src.size()) throw VerilogError("unterminated string", line, col);
      ++n;
      t.k = Tok::K::Str;
      t.text = src.substr(pos, n);
      bump(n);
      t.end = pos;
      out.push_back(std::move(t));
      continue;
    }

    t.k = Tok::K::Punct;
    bool two = false;
    if (pos + 1 < src.size()) {
      std::string pair = src.substr(pos, 2);
      for (const char* p : kPunct2)
        if (pair == p) {
          two = true;
          t.text = pair;
          break;
        }
    }
    if (!two) t.text = std::string(1, c);
    static const std::string kSingles = "()[]{};:,.#?~^&|+-*/%<>=!@'";
    if (!two && kSingles.find(c) == std::string::npos)
      throw VerilogError(std::string("unexpected character '") + c + "'", line, col);
    bump(t.text.size());
    t.end = pos;
    out.push_back(std::move(t));
  }

  Tok end;
  end.k = Tok::K::End;
  end.line = line;
  end.col = col;
  end.off = end.end = src.size();
  out.push_back(std::move(end));
  return out;
}

// ---------------------------------------------------------------------------
// parser

class Parser {
 public:
  Parser(const std::string& src) : src_(src), toks_(lex(src)) {}

  std::vector<VerilogModuleAst> parse_all() {
    std::vector<VerilogModuleAst> mods;
    while (!at_end()) mods.push_back(parse_module());
    return mods;
  }

 private:
  const std::string& src_;
  std::vector<Tok> toks_;
  size_t i_ = 0;
  VerilogModuleAst* cur_ = nullptr;

  const Tok& peek(size_t ahead = 0) const {
    size_t idx = std::min(i_ + ahead, toks_.size() - 1);
    return toks_[idx];
  }
  const Tok& take() { return toks_[std::min(i_++, toks_.size() - 1)]; }
  bool at_end() const { return peek().k == Tok::K::End; }

  [[noreturn]] void fail(const std::string& msg) const {
    const Tok& t = peek();
    throw VerilogError(msg, t.line, t.col);
  }
  bool is_punct(const char* p, size_t ahead = 0) const {
    const Tok& t = peek(ahead);
    return t.k == Tok::K::Punct && t.text == p;
  }
  bool is_kw(const char* w, size_t ahead = 0) const {
    const Tok& t = peek(ahead);
    return t.k == Tok::K::Ident && t.text == w;
  }
  void expect_punct(const char* p) {
    if (!is_punct(p)) fail(std::string("expected '") + p + "'");
    take();
  }
  std::string expect_ident() {
    if (peek().k != Tok::K::Ident) fail("expected identifier");
    std::string n = take().text;
    if (n[0] == '$') fail("unexpected system identifier " + n);
    return n;
  }

  i64 param_value(const std::string& name) const {
    for (const auto& p : cur_->params)
      if (p.name == name) return p.value;
    throw VerilogError("unknown parameter or non-constant '" + name + "'", peek().line,
                       peek().col);
  }

  // constant expression: literals, parameters, + - * / and parens
  i64 const_expr() { return const_add(); }
  i64 const_add() {
    i64 v = const_mul();
    while (is_punct("+") || is_punct("-")) {
      bool plus = peek().text == "+";
      take();
      i64 r = const_mul();
      v = plus ? v + r : v - r;
    }
    return v;
  }
  i64 const_mul() {
    i64 v = const_primary();
    while (is_punct("*") || is_punct("/")) {
      bool mul = peek().text == "*";
      take();
      i64 r = const_primary();
      if (!mul && r == 0) fail("division by zero in constant expression");
      v = mul ? v * r : v / r;
    }
    return v;
  }
  i64 const_primary() {
    if (is_punct("(")) {
      take();
      i64 v = const_expr();
      expect_punct(")");
      return v;
    }
    if (is_punct("-")) {
      take();
      return -const_primary();
    }
    if (peek().k == Tok::K::Number) {
      const Tok& t = take();
      return static_cast<i64>(t.num);
    }
    if (peek().k == Tok::K::Ident) return param_value(take().text);
    fail("expected constant expression");
  }

  // [msb:lsb] with lsb required to be 0 for vector declarations
  int parse_width_decl() {
    if (!is_punct("[")) return 1;
    take();
    i64 msb = const_expr();
    expect_punct(":");
    i64 lsb = const_expr();
    expect_punct("]");
    if (lsb != 0) fail("vector declarations must end at bit 0");
    if (msb < 0 || msb > 65535) fail("vector width out of range");
    return static_cast<int>(msb) + 1;
  }

  VerilogModuleAst parse_module() {
    VerilogModuleAst m;
    cur_ = &m;
    if (!is_kw("module")) fail("expected 'module'");
    take();
    m.name = expect_ident();
    expect_punct("(");
    if (!is_punct(")")) parse_port_list(m);
    expect_punct(")");
    expect_punct(";");
    while (!is_kw("endmodule")) {
      if (at_end()) fail("missing 'endmodule'");
      parse_item(m);
    }
    take();  // endmodule
    cur_ = nullptr;
    return m;
  }

  void parse_port_list(VerilogModuleAst& m) {
    bool is_input = true;
    bool is_reg = false;
    int width = 1;
    bool have_dir = false;
    while (true) {
      if (is_kw("input") || is_kw("output")) {
        is_input = take().text == "input";
        if (is_kw("inout")) fail("inout ports unsupported");
        is_reg = false;
        if (is_kw("wire")) take();
        if (is_kw("reg")) {
          is_reg = true;
          take();
        }
        width = parse_width_decl();
        have_dir = true;
      } else if (is_kw("inout")) {
        fail("inout ports unsupported");
      } else if (!have_dir) {
        fail("port list must declare directions (ANSI style)");
      }
      std::string name = expect_ident();
      m.ports.push_back({name, is_input, width});
      m.nets.push_back({name, width, is_reg, 0});
      if (is_punct(",")) {
        take();
        continue;
      }
      break;
    }
  }

  void parse_item(VerilogModuleAst& m) {
    if (is_kw("parameter") || is_kw("localparam")) {
      take();
      if (is_punct("[")) {
        parse_width_decl();  // tolerated and ignored; value is what matters
      }
      while (true) {
        std::string name = expect_ident();
        expect_punct("=");
        i64 v = const_expr();
        m.params.push_back({name, v});
        if (is_punct(",")) {
          take();
          continue;
        }
        break;
      }
      expect_punct(";");
      return;
    }
    if (is_kw("wire") || is_kw("reg") || is_kw("integer")) {
      bool integer = peek().text == "integer";
      bool is_reg = peek().text != "wire";
      take();
      int width = integer ? 32 : parse_width_decl();
      while (true) {
        std::string name = expect_ident();
        u64 depth = 0;
        if (is_punct("[")) {
          take();
          i64 lo = const_expr();
          expect_punct(":");
          i64 hi = const_expr();
          expect_punct("]");
          if (lo != 0 || hi < 0) fail("memory range must be [0:depth-1]");
          depth = static_cast<u64>(hi) + 1;
        }
        m.nets.push_back({name, width, is_reg, depth});
        if (is_punct(",")) {
          take();
          continue;
        }
        break;
      }
      expect_punct(";");
      return;
    }
    if (is_kw("assign")) {
      take();
      VAssign a;
      a.line = peek().line;
      a.lhs = expect_ident();
      if (is_punct("[")) {
        take();
        i64 hi = const_expr();
        if (is_punct(":")) {
          take();
          i64 lo = const_expr();
          a.msb = static_cast<int>(hi);
          a.lsb = static_cast<int>(lo);
        } else {
          a.msb = a.lsb = static_cast<int>(hi);
        }
        expect_punct("]");
        if (a.msb < a.lsb || a.lsb < 0) fail("bad part select on assignment target");
      }
      expect_punct("=");
      a.rhs = parse_expr();
      expect_punct(";");
      m.assigns.push_back(std::move(a));
      return;
    }
    if (is_kw("always") || is_kw("initial")) {
      parse_opaque_block(m);
      return;
    }
    if (is_kw("generate") || is_kw("genvar") || is_kw("function") || is_kw("task") ||
        is_kw("fork")) {
      fail("'" + peek().text + "' is outside the accepted Verilog subset");
    }
    if (peek().k == Tok::K::Ident && !keyword_set().count(peek().text)) {
      parse_instantiation(m);
      return;
    }
    fail("unexpected token '" + peek().text + "'");
  }

  void parse_opaque_block(VerilogModuleAst& m) {
    VAlways blk;
    blk.line = peek().line;
    size_t start_off = peek().off;
    blk.keyword = take().text;

    auto note_ident = [&](const Tok& t) {
      if (t.k != Tok::K::Ident) return;
      if (t.text[0] == '$') return;
      if (keyword_set().count(t.text)) return;
      if (is_verilog_primitive(t.text)) return;  // "or" in event lists
      if (std::find(blk.idents.begin(), blk.idents.end(), t.text) == blk.idents.end())
        blk.idents.push_back(t.text);
    };

    if (blk.keyword == "always") {
      if (!is_punct("@")) fail("always block needs an event control");
      take();
      expect_punct("(");
      int depth = 1;
      while (depth > 0) {
        if (at_end()) fail("unterminated event control");
        const Tok& t = take();
        if (t.k == Tok::K::Punct && t.text == "(") ++depth;
        if (t.k == Tok::K::Punct && t.text == ")") --depth;
        if (depth > 0) note_ident(t);
      }
    }
    if (!is_kw("begin")) fail(blk.keyword + " body must be a begin/end block");
    take();
    int depth = 1;
    size_t end_off = peek().off;
    while (depth > 0) {
      if (at_end()) fail("unterminated begin/end block");
      const Tok& t = take();
      if (t.k == Tok::K::Ident && t.text == "begin") ++depth;
      if (t.k == Tok::K::Ident && t.text == "end") --depth;
      if (depth > 0) note_ident(t);
      end_off = t.end;
    }
    blk.text = src_.substr(start_off, end_off - start_off);
    m.blocks.push_back(std::move(blk));
  }

  void parse_instantiation(VerilogModuleAst& m) {
    VInst inst;
    inst.line = peek().line;
    inst.type_name = expect_ident();
    if (is_punct("#")) fail("parameterized instantiation unsupported");
    inst.inst_name = expect_ident();
    expect_punct("(");
    bool named = false, positional = false;
    if (!is_punct(")")) {
      while (true) {
        VConn conn;
        conn.line = peek().line;
        if (is_punct(".")) {
          take();
          conn.formal = expect_ident();
          expect_punct("(");
          conn.actual = parse_expr();
          expect_punct(")");
          named = true;
        } else {
          conn.actual = parse_expr();
          positional = true;
        }
        inst.conns.push_back(std::move(conn));
        if (is_punct(",")) {
          take();
          continue;
        }
        break;
      }
    }
    if (named && positional) fail("mixed named and positional connections");
    expect_punct(")");
    expect_punct(";");
    m.insts.push_back(std::move(inst));
  }

  // ---- expressions ----

  VExprPtr mk(VExpr e) {
    e.line = peek().line;
    e.col = peek().col;
    return std::make_shared<VExpr>(std::move(e));
  }

  VExprPtr parse_expr() { return parse_ternary(); }

  VExprPtr parse_ternary() {
    VExprPtr c = parse_binary(0);
    if (!is_punct("?")) return c;
    take();
    VExprPtr a = parse_ternary();
    expect_punct(":");
    VExprPtr b = parse_ternary();
    VExpr e;
    e.kind = VExpr::Kind::Ternary;
    e.args = {c, a, b};
    return mk(std::move(e));
  }

  // binary operator tiers, loosest first
  static const std::vector<std::vector<std::string>>& tiers() {
    static const std::vector<std::vector<std::string>> t = {
        {"||"}, {"&&"}, {"|"}, {"^"}, {"&"},
        {"==", "!="}, {"<", "<=", ">", ">="}, {"<<", ">>"}, {"+", "-"}, {"*", "/", "%"}};
    return t;
  }

  VExprPtr parse_binary(size_t tier) {
    if (tier >= tiers().size()) return parse_unary();
    VExprPtr lhs = parse_binary(tier + 1);
    while (peek().k == Tok::K::Punct) {
      const auto& ops = tiers()[tier];
      if (std::find(ops.begin(), ops.end(), peek().text) == ops.end()) break;
      std::string op = take().text;
      VExprPtr rhs = parse_binary(tier + 1);
      VExpr e;
      e.kind = VExpr::Kind::Binary;
      e.op = op;
      e.args = {lhs, rhs};
      lhs = mk(std::move(e));
    }
    return lhs;
  }

  VExprPtr parse_unary() {
    if (is_punct("~") || is_punct("!") || is_punct("-") || is_punct("+") || is_punct("&") ||
        is_punct("|") || is_punct("^")) {
      std::string op = take().text;
      VExprPtr arg = parse_unary();
      if (op == "+") return arg;
      VExpr e;
      e.kind = VExpr::Kind::Unary;
      e.op = op;
      e.args = {arg};
      return mk(std::move(e));
    }
    return parse_primary();
  }

  VExprPtr parse_primary() {
    if (is_punct("(")) {
      take();
      VExprPtr e = parse_expr();
      expect_punct(")");
      return e;
    }
    if (is_punct("{")) return parse_concat();
    if (peek().k == Tok::K::Number) {
      const Tok& t = take();
      VExpr e;
      e.kind = VExpr::Kind::Literal;
      e.value = t.num;
      e.lit_width = t.width;
      return mk(std::move(e));
    }
    if (peek().k == Tok::K::Ident) {
      // parameters fold to literals so width inference stays purely
      // structural
      std::string name = expect_ident();
      bool is_param = false;
      i64 pv = 0;
      for (const auto& p : cur_->params)
        if (p.name == name) {
          is_param = true;
          pv = p.value;
        }
      if (is_param) {
        if (pv < 0) fail("negative parameter value in expression context");
        VExpr e;
        e.kind = VExpr::Kind::Literal;
        e.value = static_cast<u128>(pv);
        e.lit_width = 0;
        return mk(std::move(e));
      }
      if (!is_punct("[")) {
        VExpr e;
        e.kind = VExpr::Kind::Ident;
        e.name = name;
        return mk(std::move(e));
      }
      take();
      i64 hi = const_expr();
      i64 lo = hi;
      if (is_punct(":")) {
        take();
        lo = const_expr();
      }
      expect_punct("]");
      if (hi < lo || lo < 0) fail("bad select range");
      VExpr e;
      e.kind = VExpr::Kind::Select;
      e.name = name;
      e.msb = static_cast<int>(hi);
      e.lsb = static_cast<int>(lo);
      return mk(std::move(e));
    }
    fail("expected expression");
  }

  VExprPtr parse_concat() {
    expect_punct("{");
    VExprPtr first = parse_expr();
    if (is_punct("{")) {
      // replication {N{a, b}}
      if (first->kind != VExpr::Kind::Literal) fail("replication count must be a constant");
      take();
      VExpr e;
      e.kind = VExpr::Kind::Repl;
      e.repl_count = static_cast<u64>(first->value);
      if (e.repl_count == 0 || e.repl_count > 128) fail("replication count out of range");
      while (true) {
        e.args.push_back(parse_expr());
        if (is_punct(",")) {
          take();
          continue;
        }
        break;
      }
      expect_punct("}");
      expect_punct("}");
      return mk(std::move(e));
    }
    VExpr e;
    e.kind = VExpr::Kind::Concat;
    e.args = {first};
    while (is_punct(",")) {
      take();
      e.args.push_back(parse_expr());
    }
    expect_punct("}");
    return mk(std::move(e));
  }
};

u128 mask128(int n) {
  if (n <= 0) return 0;
  if (n >= 128) return ~static_cast<u128>(0);
  return (static_cast<u128>(1) << n) - 1;
}

}  // namespace

const VNet* VerilogModuleAst::find_net(std::string_view n) const {
  for (const auto& net : nets)
    if (net.name == n) return &net;
  return nullptr;
}

const VPort* VerilogModuleAst::find_port(std::string_view n) const {
  for (const auto& p : ports)
    if (p.name == n) return &p;
  return nullptr;
}

std::vector<VerilogModuleAst> parse_verilog(const std::string& source) {
  return Parser(source).parse_all();
}

VerilogModuleAst parse_single_module(const std::string& source) {
  auto mods = parse_verilog(source);
  if (mods.size() != 1)
    throw VerilogError("expected exactly one module, found " + std::to_string(mods.size()), 1, 1);
  return mods[0];
}

int infer_width(const VerilogModuleAst& m, const VExprPtr& e) {
  switch (e->kind) {
    case VExpr::Kind::Literal:
      return e->lit_width ? e->lit_width : 32;
    case VExpr::Kind::Ident: {
      const VNet* n = m.find_net(e->name);
      if (!n) throw VerilogError("unknown identifier '" + e->name + "'", e->line, e->col);
      return n->width;
    }
    case VExpr::Kind::Unary: {
      if (e->op == "~" || e->op == "-") return infer_width(m, e->args[0]);
      return 1;  // ! and reductions
    }
    case VExpr::Kind::Binary: {
      const std::string& op = e->op;
      if (op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">" || op == ">=" ||
          op == "&&" || op == "||")
        return 1;
      if (op == "<<" || op == ">>") return infer_width(m, e->args[0]);
      return std::max(infer_width(m, e->args[0]), infer_width(m, e->args[1]));
    }
    case VExpr::Kind::Ternary:
      return std::max(infer_width(m, e->args[1]), infer_width(m, e->args[2]));
    case VExpr::Kind::Select:
      return e->msb - e->lsb + 1;
    case VExpr::Kind::Concat: {
      int w = 0;
      for (const auto& a : e->args) w += infer_width(m, a);
      return w;
    }
    case VExpr::Kind::Repl: {
      int w = 0;
      for (const auto& a : e->args) w += infer_width(m, a);
      return static_cast<int>(e->repl_count) * w;
    }
  }
  return 1;
}

bool is_verilog_primitive(std::string_view name) {
  static const std::set<std::string, std::less<>> prim = {
      "and", "or",     "not",    "xor",    "xnor",   "nand",   "nor",
      "buf", "bufif0", "bufif1", "notif0", "notif1", "pullup", "pulldown"};
  return prim.count(name) > 0;
}

VerilogModule module_from_source(const std::string& source) {
  VerilogModuleAst ast = parse_single_module(source);
  VerilogModule rec;
  rec.name = ast.name;
  rec.source = source;
  rec.ports = ast.ports;
  std::set<std::string> deps;
  for (const auto& inst : ast.insts)
    if (!is_verilog_primitive(inst.type_name)) deps.insert(inst.type_name);
  rec.deps.assign(deps.begin(), deps.end());
  return rec;
}

// ---------------------------------------------------------------------------
// combinational walker

namespace {

struct Evaluator {
  const VerilogModuleAst& m;
  const std::map<std::string, u64>& inputs;
  std::map<std::string, std::vector<const VAssign*>> frags;
  std::map<std::string, u128> memo;
  std::set<std::string> in_progress;

  explicit Evaluator(const VerilogModuleAst& mod, const std::map<std::string, u64>& in)
      : m(mod), inputs(in) {
    for (const auto& a : m.assigns) frags[a.lhs].push_back(&a);
  }

  u128 net_value(const std::string& name, int line, int col) {
    auto it = memo.find(name);
    if (it != memo.end()) return it->second;
    const VNet* net = m.find_net(name);
    if (!net) throw VerilogError("unknown identifier '" + name + "'", line, col);
    if (net->width > 128)
      throw VerilogError("net '" + name + "' too wide to evaluate", line, col);
    const VPort* port = m.find_port(name);
    if (port && port->is_input) {
      auto in = inputs.find(name);
      if (in == inputs.end())
        throw VerilogError("no value for input '" + name + "'", line, col);
      u128 v = static_cast<u128>(in->second) & mask128(net->width);
      memo[name] = v;
      return v;
    }
    if (!in_progress.insert(name).second)
      throw VerilogError("combinational cycle through '" + name + "'", line, col);
    auto fit = frags.find(name);
    if (fit == frags.end() || fit->second.empty())
      throw VerilogError("undriven net '" + name + "'", line, col);
    u128 v = 0;
    u128 covered = 0;
    for (const VAssign* a : fit->second) {
      int msb = a->msb >= 0 ? a->msb : net->width - 1;
      int lsb = a->lsb >= 0 ? a->lsb : 0;
      if (msb >= net->width)
        throw VerilogError("assignment exceeds width of '" + name + "'", a->line, 0);
      u128 fmask = mask128(msb - lsb + 1) << lsb;
      if (covered & fmask)
        throw VerilogError("overlapping drivers on '" + name + "'", a->line, 0);
      covered |= fmask;
      v |= (eval(a->rhs) << lsb) & fmask;
    }
    v &= mask128(net->width);
    in_progress.erase(name);
    memo[name] = v;
    return v;
  }

  u128 eval(const VExprPtr& e) {
    switch (e->kind) {
      case VExpr::Kind::Literal:
        return e->lit_width ? (e->value & mask128(e->lit_width)) : e->value;
      case VExpr::Kind::Ident:
        return net_value(e->name, e->line, e->col);
      case VExpr::Kind::Unary: {
        u128 v = eval(e->args[0]);
        int w = infer_width(m, e->args[0]);
        if (e->op == "~") return (~v) & mask128(w);
        if (e->op == "-") return (static_cast<u128>(0) - v) & mask128(w);
        if (e->op == "!") return v == 0 ? 1 : 0;
        if (e->op == "&") return v == mask128(w) ? 1 : 0;
        if (e->op == "|") return v != 0 ? 1 : 0;
        if (e->op == "^") {
          int par = 0;
          while (v) {
            par ^= static_cast<int>(v & 1);
            v >>= 1;
          }
          return static_cast<u128>(par);
        }
        throw VerilogError("unsupported unary '" + e->op + "'", e->line, e->col);
      }
      case VExpr::Kind::Binary: {
        const std::string& op = e->op;
        u128 a = eval(e->args[0]);
        u128 b = eval(e->args[1]);
        if (op == "+") return a + b;
        if (op == "-") return a - b;
        if (op == "*") return a * b;
        if (op == "/") {
          if (b == 0) throw VerilogError("division by zero", e->line, e->col);
          return a / b;
        }
        if (op == "%") {
          if (b == 0) throw VerilogError("modulo by zero", e->line, e->col);
          return a % b;
        }
        if (op == "&") return a & b;
        if (op == "|") return a | b;
        if (op == "^") return a ^ b;
        if (op == "<<") return b >= 128 ? 0 : a << static_cast<int>(b);
        if (op == ">>") return b >= 128 ? 0 : a >> static_cast<int>(b);
        if (op == "==") return a == b ? 1 : 0;
        if (op == "!=") return a != b ? 1 : 0;
        if (op == "<") return a < b ? 1 : 0;
        if (op == "<=") return a <= b ? 1 : 0;
        if (op == ">") return a > b ? 1 : 0;
        if (op == ">=") return a >= b ? 1 : 0;
        if (op == "&&") return (a != 0 && b != 0) ? 1 : 0;
        if (op == "||") return (a != 0 || b != 0) ? 1 : 0;
        throw VerilogError("unsupported operator '" + op + "'", e->line, e->col);
      }
      case VExpr::Kind::Ternary:
        return eval(e->args[0]) != 0 ? eval(e->args[1]) : eval(e->args[2]);
      case VExpr::Kind::Select: {
        u128 v = net_value(e->name, e->line, e->col);
        return (v >> e->lsb) & mask128(e->msb - e->lsb + 1);
      }
      case VExpr::Kind::Concat: {
        u128 v = 0;
        for (const auto& a : e->args) {
          int w = infer_width(m, a);
          v = (v << w) | (eval(a) & mask128(w));
        }
        return v;
      }
      case VExpr::Kind::Repl: {
        u128 part = 0;
        int w = 0;
        for (const auto& a : e->args) {
          int aw = infer_width(m, a);
          part = (part << aw) | (eval(a) & mask128(aw));
          w += aw;
        }
        u128 v = 0;
        for (u64 r = 0; r < e->repl_count; ++r) v = (v << w) | part;
        return v;
      }
    }
    throw VerilogError("bad expression", e->line, e->col);
  }
};

}  // namespace

std::map<std::string, u64> eval_combinational(const VerilogModuleAst& m,
                                              const std::map<std::string, u64>& inputs) {
  if (!m.insts.empty())
    throw VerilogError("module '" + m.name + "' instantiates submodules; not flat", 1, 1);
  if (!m.blocks.empty())
    throw VerilogError("module '" + m.name + "' has procedural blocks; not combinational", 1, 1);
  Evaluator ev(m, inputs);
  std::map<std::string, u64> out;
  for (const auto& p : m.ports) {
    if (p.is_input) continue;
    if (p.width > 64)
      throw VerilogError("output '" + p.name + "' wider than 64 bits", 1, 1);
    u128 v = ev.net_value(p.name, 1, 1);
    out[p.name] = static_cast<u64>(v & mask128(p.width));
  }
  return out;
}

}  // namespace tpugen
