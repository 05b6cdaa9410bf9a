#include "tpugen/design.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <sstream>
#include <vector>

#include "tpugen/arith.hpp"
#include "tpugen/common.hpp"

namespace tpugen {
namespace {

// ---------------------------------------------------------------------------
// tokenizer

enum class TokKind { Num, Word, Param, UnitSpec };

struct Token {
  TokKind kind = TokKind::Word;
  std::string text;           // lowered word text / original fragment
  double num = 0.0;           // Num
  bool integral = false;      // Num
  std::string pname;          // Param
  u64 pval = 0;               // Param
  UnitChoice unit;            // UnitSpec (explicit colon syntax)
  int line = 0;
  bool consumed = false;
};

bool is_registry_name(const std::string& lower) {
  return find_mult_rule(lower) != nullptr || find_adder_rule(lower) != nullptr;
}

bool parse_number(const std::string& s, double& out, bool& integral) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return false;
  integral = s.find_first_of(".eE") == std::string::npos;
  return true;
}

bool parse_u64_strict(const std::string& s, u64& out) {
  if (s.empty()) return false;
  out = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    out = out * 10 + static_cast<u64>(c - '0');
  }
  return true;
}

// "k=6,m=4" -> params map; throws on malformed pieces.
std::map<std::string, u64> parse_param_list(const std::string& kind, const std::string& list) {
  std::map<std::string, u64> out;
  for (const auto& piece : split(list, ',')) {
    auto eq = piece.find('=');
    u64 v = 0;
    if (eq == std::string::npos || !parse_u64_strict(trim(piece.substr(eq + 1)), v))
      throw SpecError("bad parameter syntax '" + piece + "' for unit '" + kind + "'");
    std::string name = to_lower(trim(piece.substr(0, eq)));
    if (name.empty()) throw SpecError("bad parameter syntax '" + piece + "' for unit '" + kind + "'");
    auto [it, fresh] = out.emplace(name, v);
    if (!fresh && it->second != v)
      throw SpecError("conflicting values for parameter '" + name + "' of unit '" + kind + "'");
  }
  return out;
}

void append_word_tokens(std::vector<Token>& toks, const std::string& raw, int line) {
  if (raw.empty()) return;
  std::string lower = to_lower(raw);

  // Explicit unit syntax: name:param=value,...
  auto colon = raw.find(':');
  if (colon != std::string::npos && colon > 0) {
    std::string name = to_lower(raw.substr(0, colon));
    if (is_registry_name(name)) {
      Token t;
      t.kind = TokKind::UnitSpec;
      t.text = lower;
      t.line = line;
      t.unit.kind = name;
      std::string rest = raw.substr(colon + 1);
      if (!rest.empty()) t.unit.params = parse_param_list(name, rest);
      toks.push_back(std::move(t));
      return;
    }
  }

  // name=value parameter
  auto eq = raw.find('=');
  if (eq != std::string::npos && eq > 0 && colon == std::string::npos) {
    std::string name = to_lower(raw.substr(0, eq));
    u64 v = 0;
    bool ident = std::all_of(name.begin(), name.end(),
                             [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
    if (ident && parse_u64_strict(raw.substr(eq + 1), v)) {
      Token t;
      t.kind = TokKind::Param;
      t.text = lower;
      t.pname = name;
      t.pval = v;
      t.line = line;
      toks.push_back(std::move(t));
      return;
    }
  }

  // NxM fused size
  auto xpos = lower.find('x');
  if (xpos != std::string::npos && xpos > 0 && xpos + 1 < lower.size()) {
    double a = 0, b = 0;
    bool ia = false, ib = false;
    if (parse_number(lower.substr(0, xpos), a, ia) && parse_number(lower.substr(xpos + 1), b, ib)) {
      append_word_tokens(toks, lower.substr(0, xpos), line);
      append_word_tokens(toks, "x", line);
      append_word_tokens(toks, lower.substr(xpos + 1), line);
      return;
    }
  }

  // Pure number
  {
    double v = 0;
    bool integral = false;
    if (parse_number(lower, v, integral)) {
      Token t;
      t.kind = TokKind::Num;
      t.text = lower;
      t.num = v;
      t.integral = integral;
      t.line = line;
      toks.push_back(std::move(t));
      return;
    }
  }

  // number fused with a unit word: 100mW, 8-bit, 0.25mm2
  {
    size_t i = 0;
    while (i < lower.size() && (std::isdigit(static_cast<unsigned char>(lower[i])) || lower[i] == '.')) ++i;
    if (i > 0 && i < lower.size()) {
      size_t j = i;
      if (lower[j] == '-') ++j;
      double v = 0;
      bool integral = false;
      if (j < lower.size() && std::isalpha(static_cast<unsigned char>(lower[j])) &&
          parse_number(lower.substr(0, i), v, integral)) {
        Token t;
        t.kind = TokKind::Num;
        t.text = lower.substr(0, i);
        t.num = v;
        t.integral = integral;
        t.line = line;
        toks.push_back(std::move(t));
        append_word_tokens(toks, lower.substr(j), line);
        return;
      }
    }
  }

  // hyphenated compound: tokenize the pieces separately
  if (lower.find('-') != std::string::npos) {
    for (const auto& piece : split(lower, '-')) append_word_tokens(toks, piece, line);
    return;
  }

  Token t;
  t.kind = TokKind::Word;
  t.text = lower;
  t.line = line;
  toks.push_back(std::move(t));
}

const char* kStrip = ".,;:()[]{}\"'!?";

std::string strip_punct(std::string w) {
  while (!w.empty() && std::strchr(kStrip, w.front())) w.erase(w.begin());
  while (!w.empty() && std::strchr(kStrip, w.back())) w.pop_back();
  return w;
}

struct TokenizedLine {
  std::string raw;                  // original text
  std::vector<std::string> words;   // punctuation-stripped, original case
};

struct TokenStream {
  std::vector<Token> toks;
  std::vector<TokenizedLine> lines;
};

TokenStream tokenize(const std::string& text) {
  // Normalize the superscript-2 and micro glyphs so mm² and µm2 hit the
  // ASCII unit table.
  std::string norm;
  norm.reserve(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c == 0xC2 && i + 1 < text.size()) {
      unsigned char d = static_cast<unsigned char>(text[i + 1]);
      if (d == 0xB2) { norm += '2'; ++i; continue; }
      if (d == 0xB5) { norm += 'u'; ++i; continue; }
    }
    norm += static_cast<char>(c);
  }

  TokenStream ts;
  int line_no = 0;
  for (const auto& line : split(norm, '\n')) {
    TokenizedLine tl;
    tl.raw = line;
    std::istringstream iss(line);
    std::string w;
    while (iss >> w) {
      std::string stripped = strip_punct(w);
      if (stripped.empty()) continue;
      tl.words.push_back(stripped);
      append_word_tokens(ts.toks, stripped, line_no);
    }
    ts.lines.push_back(std::move(tl));
    ++line_no;
  }
  return ts;
}

// ---------------------------------------------------------------------------
// binding collection

template <class T>
struct Slot {
  std::optional<T> v;
  std::string src;

  void bind(const char* field, const T& value, const std::string& source) {
    if (v && !(*v == value))
      throw SpecError(std::string("contradictory ") + field + ": '" + src + "' vs '" + source + "'");
    if (!v) {
      v = value;
      src = source;
    }
  }
};

const std::vector<std::string> kMultRoleWords = {"multiplier", "multipliers", "mult"};
const std::vector<std::string> kAdderRoleWords = {"adder", "adders"};

bool word_in(const std::vector<std::string>& set, const Token& t) {
  return t.kind == TokKind::Word &&
         std::find(set.begin(), set.end(), t.text) != set.end();
}

struct Bindings {
  Slot<int> rows, cols, dw, ww;
  Slot<UnitChoice> mult, adder;
  Slot<double> power, area, latency, clock;
  Slot<std::string> label;
};

// Role of a unit mention, decided by the nearest unconsumed role word:
// immediately before wins over immediately after ("Adder: trunc" vs "trunc
// adder"), then two away either side ("a trunc-based adder").
enum class Role { Mult, Adder, Unknown };

Role adjacent_role(const std::vector<Token>& toks, size_t i, int& role_off) {
  static const int kOffsets[] = {-1, 1, -2, 2};
  for (int off : kOffsets) {
    if (off < 0 && i < static_cast<size_t>(-off)) continue;
    size_t idx = i + off;
    if (idx >= toks.size() || toks[idx].consumed) continue;
    if (word_in(kMultRoleWords, toks[idx])) {
      role_off = off;
      return Role::Mult;
    }
    if (word_in(kAdderRoleWords, toks[idx])) {
      role_off = off;
      return Role::Adder;
    }
  }
  role_off = 0;
  return Role::Unknown;
}

void scan_units(std::vector<Token>& toks, Bindings& b) {
  for (size_t i = 0; i < toks.size(); ++i) {
    Token& t = toks[i];
    if (t.consumed) continue;

    UnitChoice choice;
    if (t.kind == TokKind::UnitSpec) {
      choice = t.unit;
    } else if (t.kind == TokKind::Word && is_registry_name(t.text)) {
      choice.kind = t.text;
    } else {
      continue;
    }

    bool in_mult = find_mult_rule(choice.kind) != nullptr;
    bool in_adder = find_adder_rule(choice.kind) != nullptr;
    int role_off = 0;
    Role role = adjacent_role(toks, i, role_off);
    t.consumed = true;

    // trailing name=value params; the role word is consumed only when it is
    // the one this mention bound through ("drum multiplier k=6")
    size_t j = i + 1;
    if (role_off == 1) {
      toks[j].consumed = true;
      ++j;
    }
    while (j < toks.size() && !toks[j].consumed && toks[j].kind == TokKind::Param) {
      auto [it, fresh] = choice.params.emplace(toks[j].pname, toks[j].pval);
      if (!fresh && it->second != toks[j].pval)
        throw SpecError("conflicting values for parameter '" + toks[j].pname + "' of unit '" +
                        choice.kind + "'");
      toks[j].consumed = true;
      ++j;
    }

    if (in_mult && in_adder) {
      switch (role) {
        case Role::Mult:
          b.mult.bind("multiplier", choice, t.text);
          break;
        case Role::Adder:
          b.adder.bind("adder", choice, t.text);
          break;
        case Role::Unknown:
          // A bare "exact" plainly means the whole datapath. Anything else
          // (trunc) is genuinely ambiguous and worth an error.
          if (choice.kind == "exact") {
            b.mult.bind("multiplier", choice, t.text);
            b.adder.bind("adder", choice, t.text);
          } else {
            throw SpecError("unit '" + choice.kind +
                            "' names both a multiplier and an adder; say which (e.g. '" +
                            choice.kind + " adder')");
          }
          break;
      }
    } else if (in_mult) {
      b.mult.bind("multiplier", choice, t.text);
    } else {
      b.adder.bind("adder", choice, t.text);
    }
  }
}

bool positive_int(const Token& t, int& out) {
  if (t.kind != TokKind::Num || !t.integral) return false;
  if (t.num < 1 || t.num > 1e9) return false;
  out = static_cast<int>(t.num);
  return true;
}

void scan_sizes(std::vector<Token>& toks, Bindings& b) {
  // N x M / N by M first so that "size: 16 x 8" doesn't also fire the
  // square-size rule on the 16.
  for (size_t i = 0; i + 2 < toks.size(); ++i) {
    if (toks[i].consumed || toks[i + 1].consumed || toks[i + 2].consumed) continue;
    int r = 0, c = 0;
    if (!positive_int(toks[i], r) || !positive_int(toks[i + 2], c)) continue;
    const Token& mid = toks[i + 1];
    if (!(mid.kind == TokKind::Word && (mid.text == "x" || mid.text == "by"))) continue;
    std::string src = toks[i].text + " " + mid.text + " " + toks[i + 2].text;
    b.rows.bind("row count", r, src);
    b.cols.bind("column count", c, src);
    toks[i].consumed = toks[i + 1].consumed = toks[i + 2].consumed = true;
  }
  for (size_t i = 0; i + 1 < toks.size(); ++i) {
    if (toks[i].consumed || toks[i + 1].consumed) continue;
    if (!(toks[i].kind == TokKind::Word && toks[i].text == "size")) continue;
    int n = 0;
    if (!positive_int(toks[i + 1], n)) continue;
    std::string src = "size " + toks[i + 1].text;
    b.rows.bind("row count", n, src);
    b.cols.bind("column count", n, src);
    toks[i].consumed = toks[i + 1].consumed = true;
  }
}

void scan_widths(std::vector<Token>& toks, Bindings& b) {
  for (size_t i = 0; i + 2 < toks.size(); ++i) {
    if (toks[i].consumed || toks[i + 1].consumed || toks[i + 2].consumed) continue;
    int w = 0;
    if (!positive_int(toks[i], w)) continue;
    const Token& unit = toks[i + 1];
    if (!(unit.kind == TokKind::Word && (unit.text == "bit" || unit.text == "bits"))) continue;
    const Token& what = toks[i + 2];
    if (what.kind != TokKind::Word) continue;
    std::string src = toks[i].text + "-bit " + what.text;
    if (what.text == "data") {
      b.dw.bind("data width", w, src);
    } else if (what.text == "weight" || what.text == "weights") {
      b.ww.bind("weight width", w, src);
    } else if (what.text == "precision") {
      b.dw.bind("data width", w, src);
      b.ww.bind("weight width", w, src);
    } else {
      continue;
    }
    toks[i].consumed = toks[i + 1].consumed = toks[i + 2].consumed = true;
  }
}

void scan_budget(std::vector<Token>& toks, Bindings& b) {
  for (size_t i = 0; i + 1 < toks.size(); ++i) {
    if (toks[i].consumed || toks[i + 1].consumed) continue;
    if (toks[i].kind != TokKind::Num) continue;
    const Token& unit = toks[i + 1];
    if (unit.kind != TokKind::Word) continue;
    double v = toks[i].num;
    std::string src = toks[i].text + " " + unit.text;
    bool hit = true;
    if (unit.text == "mw") {
      b.power.bind("power budget", v, src);
    } else if (unit.text == "w") {
      b.power.bind("power budget", v * 1000.0, src);
    } else if (unit.text == "mm2") {
      b.area.bind("area budget", v, src);
    } else if (unit.text == "um2") {
      b.area.bind("area budget", v / 1e6, src);
    } else if (unit.text == "ms") {
      b.latency.bind("latency budget", v, src);
    } else if (unit.text == "s") {
      b.latency.bind("latency budget", v * 1000.0, src);
    } else if (unit.text == "ns") {
      b.clock.bind("clock period", v, src);
    } else {
      hit = false;
    }
    if (hit) toks[i].consumed = toks[i + 1].consumed = true;
  }
}

// "label: anything at all" as the first word of a line claims the rest of
// that line verbatim. Runs before every other rule so label text never binds
// units or sizes.
void scan_label_lines(TokenStream& ts, Bindings& b) {
  for (size_t li = 0; li < ts.lines.size(); ++li) {
    const TokenizedLine& tl = ts.lines[li];
    if (tl.words.empty() || to_lower(tl.words[0]) != "label") continue;
    auto pos = to_lower(tl.raw).find("label");
    std::string rest = tl.raw.substr(pos + 5);
    if (!rest.empty() && rest[0] == ':') rest = rest.substr(1);
    std::string value = trim(rest);
    b.label.bind("label", value, "label: " + value);
    for (auto& t : ts.toks)
      if (t.line == static_cast<int>(li)) t.consumed = true;
  }
}

}  // namespace

DesignSpec parse_spec(const std::string& text) {
  TokenStream ts = tokenize(text);
  Bindings b;
  scan_label_lines(ts, b);
  scan_units(ts.toks, b);
  scan_sizes(ts.toks, b);
  scan_widths(ts.toks, b);
  scan_budget(ts.toks, b);

  DesignSpec spec;
  spec.rows = b.rows.v;
  spec.cols = b.cols.v;
  spec.dw = b.dw.v;
  spec.ww = b.ww.v;
  spec.mult = b.mult.v;
  spec.adder = b.adder.v;
  spec.clock_ns = b.clock.v;
  if (b.power.v || b.area.v || b.latency.v)
    spec.budget = Budget{b.power.v, b.area.v, b.latency.v};
  if (b.label.v) {
    spec.label = *b.label.v;
  } else {
    bool anything = spec.rows || spec.cols || spec.dw || spec.ww || spec.mult ||
                    spec.adder || spec.budget || spec.clock_ns;
    // A request that matches nothing is still a request; keep it as the label
    // so retrieval has something to work with.
    if (!anything) spec.label = trim(text);
  }
  return spec;
}

DesignSpec canonicalize(const DesignSpec& spec) {
  DesignSpec out = spec;
  if (out.rows && !out.cols) out.cols = out.rows;
  if (out.cols && !out.rows) out.rows = out.cols;
  if (!out.rows) out.rows = 8;
  if (!out.cols) out.cols = 8;
  if (!out.dw) out.dw = 8;
  if (!out.ww) out.ww = 8;

  auto check_size = [](const char* field, int v) {
    for (int s : kSupportedSizes)
      if (s == v) return;
    throw SpecError(std::string(field) + " " + std::to_string(v) +
                    " unsupported (want a power of two in [4, 256])");
  };
  check_size("row count", *out.rows);
  check_size("column count", *out.cols);
  bool dw_ok = false;
  for (int d : kSupportedDws) dw_ok |= (*out.dw == d);
  if (!dw_ok)
    throw SpecError("data width " + std::to_string(*out.dw) + " unsupported (want 8, 16, or 32)");
  if (*out.ww < kMinWw || *out.ww > kMaxWw)
    throw SpecError("weight width " + std::to_string(*out.ww) + " unsupported (want 3..32)");

  if (!out.mult) out.mult = UnitChoice{"exact", {}};
  if (!out.adder) out.adder = UnitChoice{"exact", {}};

  int mw = mult_width(*out.dw, *out.ww);
  int aw = default_acc_width(*out.dw, *out.ww);
  try {
    MultUnit mu = make_mult(out.mult->kind, mw, out.mult->params);
    const MultRule* mr = find_mult_rule(mu.kind);
    UnitChoice full{mu.kind, {}};
    for (size_t i = 0; i < mr->params.size(); ++i) full.params[mr->params[i].name] = mu.params[i];
    out.mult = full;

    AdderUnit au = make_adder(out.adder->kind, aw, out.adder->params);
    const AdderRule* ar = find_adder_rule(au.kind);
    UnitChoice fulla{au.kind, {}};
    for (size_t i = 0; i < ar->params.size(); ++i) fulla.params[ar->params[i].name] = au.params[i];
    out.adder = fulla;
  } catch (const ParamError& e) {
    throw SpecError(e.what());
  }

  if (!out.clock_ns) out.clock_ns = 2.0;
  if (!(*out.clock_ns > 0)) throw SpecError("clock period must be positive");
  if (out.budget && !out.budget->power_mw && !out.budget->area_mm2 && !out.budget->latency_ms)
    out.budget.reset();
  if (out.budget) {
    auto pos = [](const char* f, const std::optional<double>& v) {
      if (v && !(*v > 0)) throw SpecError(std::string(f) + " budget must be positive");
    };
    pos("power", out.budget->power_mw);
    pos("area", out.budget->area_mm2);
    pos("latency", out.budget->latency_ms);
  }

  // Keep labels single-line so the rendered prompt stays line-structured.
  for (char& c : out.label)
    if (c == '\n' || c == '\r') c = ' ';
  out.label = trim(out.label);
  return out;
}

std::string render_prompt(const DesignSpec& spec) {
  if (!spec.rows || !spec.cols || !spec.dw || !spec.ww || !spec.mult || !spec.adder ||
      !spec.clock_ns)
    throw SpecError("render_prompt needs a fully bound spec; canonicalize first");

  MultUnit mu{spec.mult->kind, {}};
  const MultRule* mr = find_mult_rule(spec.mult->kind);
  if (!mr) throw SpecError("unknown multiplier '" + spec.mult->kind + "'");
  for (const auto& p : mr->params) {
    auto it = spec.mult->params.find(p.name);
    if (it == spec.mult->params.end())
      throw SpecError("multiplier '" + spec.mult->kind + "' missing parameter '" + p.name + "'");
    mu.params.push_back(it->second);
  }
  AdderUnit au{spec.adder->kind, {}};
  const AdderRule* ar = find_adder_rule(spec.adder->kind);
  if (!ar) throw SpecError("unknown adder '" + spec.adder->kind + "'");
  for (const auto& p : ar->params) {
    auto it = spec.adder->params.find(p.name);
    if (it == spec.adder->params.end())
      throw SpecError("adder '" + spec.adder->kind + "' missing parameter '" + p.name + "'");
    au.params.push_back(it->second);
  }

  std::ostringstream os;
  os << "Design an output-stationary systolic-array TPU accelerator.\n";
  os << "Array size: " << *spec.rows << " x " << *spec.cols << ".\n";
  os << "Precision: " << *spec.dw << "-bit data, " << *spec.ww << "-bit weights.\n";
  os << "Multiplier: " << render_mult(mu) << ".\n";
  os << "Adder: " << render_adder(au) << ".\n";
  os << "Clock: " << format_sig12(*spec.clock_ns) << " ns.\n";
  if (spec.budget) {
    std::vector<std::string> parts;
    if (spec.budget->power_mw) parts.push_back(format_sig12(*spec.budget->power_mw) + " mW");
    if (spec.budget->area_mm2) parts.push_back(format_sig12(*spec.budget->area_mm2) + " mm2");
    if (spec.budget->latency_ms) parts.push_back(format_sig12(*spec.budget->latency_ms) + " ms");
    if (!parts.empty()) {
      os << "Budget: ";
      for (size_t i = 0; i < parts.size(); ++i) os << (i ? ", " : "") << parts[i];
      os << ".\n";
    }
  }
  if (!spec.label.empty()) os << "Label: " << spec.label << "\n";
  return os.str();
}

nlohmann::json spec_to_json(const DesignSpec& spec) {
  nlohmann::json j;
  auto put_int = [&](const char* k, const std::optional<int>& v) {
    if (v) j[k] = *v;
  };
  put_int("rows", spec.rows);
  put_int("cols", spec.cols);
  put_int("dw", spec.dw);
  put_int("ww", spec.ww);
  auto put_unit = [&](const char* k, const std::optional<UnitChoice>& u) {
    if (!u) return;
    nlohmann::json ju;
    ju["kind"] = u->kind;
    ju["params"] = nlohmann::json::object();
    for (const auto& [name, val] : u->params) ju["params"][name] = val;
    j[k] = ju;
  };
  put_unit("mult", spec.mult);
  put_unit("adder", spec.adder);
  if (spec.clock_ns) j["clock_period_ns"] = *spec.clock_ns;
  if (spec.budget) {
    nlohmann::json jb;
    if (spec.budget->power_mw) jb["power_mw"] = *spec.budget->power_mw;
    if (spec.budget->area_mm2) jb["area_mm2"] = *spec.budget->area_mm2;
    if (spec.budget->latency_ms) jb["latency_ms"] = *spec.budget->latency_ms;
    j["budget"] = jb;
  }
  j["label"] = spec.label;
  return j;
}

TpuConfig spec_to_config(const DesignSpec& canonical) {
  DesignSpec spec = canonicalize(canonical);
  if (*spec.rows != *spec.cols)
    throw SpecError("the hardware template is a square array; got " + std::to_string(*spec.rows) +
                    " x " + std::to_string(*spec.cols));
  int mw = mult_width(*spec.dw, *spec.ww);
  int aw = default_acc_width(*spec.dw, *spec.ww);
  MultUnit mu = make_mult(spec.mult->kind, mw, spec.mult->params);
  AdderUnit au = make_adder(spec.adder->kind, aw, spec.adder->params);
  TpuConfig cfg = default_config(*spec.rows, *spec.dw, *spec.ww, mu, au);
  cfg.clock_period_ns = *spec.clock_ns;
  return cfg;
}

DesignSpec config_to_spec(const TpuConfig& cfg) {
  DesignSpec spec;
  spec.rows = cfg.s;
  spec.cols = cfg.s;
  spec.dw = cfg.dw;
  spec.ww = cfg.ww;
  UnitChoice mu{cfg.mult.kind, {}};
  const MultRule* mr = find_mult_rule(cfg.mult.kind);
  for (size_t i = 0; i < mr->params.size(); ++i) mu.params[mr->params[i].name] = cfg.mult.params[i];
  spec.mult = mu;
  UnitChoice au{cfg.adder.kind, {}};
  const AdderRule* ar = find_adder_rule(cfg.adder.kind);
  for (size_t i = 0; i < ar->params.size(); ++i) au.params[ar->params[i].name] = cfg.adder.params[i];
  spec.adder = au;
  spec.clock_ns = cfg.clock_period_ns;
  return spec;
}

}  // namespace tpugen
