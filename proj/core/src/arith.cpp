#include "tpugen/arith.hpp"

#include <algorithm>
#include <sstream>

namespace tpugen {

namespace {

// shift helpers immune to the >= width UB of the C++ shift operators
u64 shr64(u64 x, int s) { return s >= 64 ? 0 : x >> s; }
u64 shl64(u64 x, int s) { return s >= 64 ? 0 : x << s; }

u64 d_zero(int) { return 0; }
u64 d_half_w(int w) { return static_cast<u64>(w / 2); }
u64 d_four(int) { return 4; }
u64 d_one(int) { return 1; }
u64 d_drum_k(int w) { return static_cast<u64>(std::max(2, w / 2)); }

bool ok_m_adder(u64 v, int w) { return v <= static_cast<u64>(w); }
bool ok_vbl(u64 v, int w) { return v <= static_cast<u64>(2 * w - 1); }
bool ok_m_log(u64 v, int w) { return v <= static_cast<u64>(w); }
bool ok_nibble(u64 v, int w) {
  return v >= 1 && v <= static_cast<u64>(w) && w % static_cast<int>(v) == 0;
}
bool ok_alphabets(u64 v, int w) {
  (void)w;
  return v >= 1 && v <= 256;
}
bool ok_dralm_dw(u64 v, int w) { return v < static_cast<u64>(w); }
bool ok_trunc_dw(u64 v, int w) { return v <= static_cast<u64>(w); }
bool ok_round_width(u64 v, int w) { return v >= 1 && v <= static_cast<u64>(w); }
bool ok_drum_k(u64 v, int w) { return v >= 2 && v <= static_cast<u64>(w); }

// ---- adder rules ----

u128 add_exact(int, const std::vector<u64>&, u64 a, u64 b) {
  return static_cast<u128>(a) + b;
}

// Low M bits OR'd; high parts added exactly. cin = a[M-1] & b[M-1] models the
// carry the OR stage swallows (the no-carry flavor drops it).
u128 add_loa(int w, int m, u64 a, u64 b, bool carry_in) {
  if (m == 0) return add_exact(w, {}, a, b);
  u64 low = (a | b) & mask_bits(m);
  u64 cin = carry_in ? ((a >> (m - 1)) & (b >> (m - 1)) & 1) : 0;
  u128 high = static_cast<u128>(shr64(a, m)) + shr64(b, m) + cin;
  return (high << m) | low;
}

u128 add_loa_c(int w, const std::vector<u64>& p, u64 a, u64 b) {
  return add_loa(w, static_cast<int>(p[0]), a, b, true);
}
u128 add_loa_nc(int w, const std::vector<u64>& p, u64 a, u64 b) {
  return add_loa(w, static_cast<int>(p[0]), a, b, false);
}

u128 add_trunc(int w, const std::vector<u64>& p, u64 a, u64 b) {
  int m = static_cast<int>(p[0]);
  if (m == 0) return add_exact(w, p, a, b);
  u128 high = static_cast<u128>(shr64(a, m)) + shr64(b, m);
  return high << m;
}

u128 add_soa(int w, const std::vector<u64>& p, u64 a, u64 b) {
  int m = static_cast<int>(p[0]);
  if (m == 0) return add_exact(w, p, a, b);
  return add_trunc(w, p, a, b) | mask_bits(m);
}

// ---- multiplier rules ----

u64 mul_exact(int, const std::vector<u64>&, u64 a, u64 b) { return a * b; }

// Partial-product bits in columns below vbl are dropped.
u64 mul_bam(int w, const std::vector<u64>& p, u64 a, u64 b) {
  int vbl = static_cast<int>(p[0]);
  u64 acc = 0;
  for (int i = 0; i < w; ++i) {
    if (!((a >> i) & 1)) continue;
    for (int j = 0; j < w; ++j) {
      if (i + j < vbl) continue;
      if ((b >> j) & 1) acc += u64{1} << (i + j);
    }
  }
  return acc;
}

// Fixed-point base-2 log: characteristic k = leading-one position, mantissa
// fraction in W-1 bits. Exact at this stage; the approximation enters when
// the two logs are summed.
u64 mitchell_log(int w, u64 x) {
  int k = leading_one(x);
  u64 frac = (x << (w - 1 - k)) & mask_bits(w - 1);
  return (static_cast<u64>(k) << (w - 1)) | frac;
}

// antilog(k' + f') = 2^k' * (1 + f'), truncating on right shifts
u64 mitchell_antilog(int w, u128 lsum) {
  int kp = static_cast<int>(lsum >> (w - 1));
  u64 frac = static_cast<u64>(lsum) & mask_bits(w - 1);
  u64 mant = (u64{1} << (w - 1)) | frac;
  int sh = kp - (w - 1);
  return sh >= 0 ? shl64(mant, sh) : shr64(mant, -sh);
}

// Log-domain multiply; the log sum runs through the named approximate adder
// at the log width (W-1 fraction bits plus the characteristic field).
u64 mul_alm(int w, int m, u64 a, u64 b, const char* adder_kind) {
  if (a == 0 || b == 0) return 0;
  int lw = (w - 1) + clog2(static_cast<u64>(w));
  AdderUnit log_adder{adder_kind, {static_cast<u64>(m)}};
  u128 lsum = approx_add(log_adder, lw, mitchell_log(w, a), mitchell_log(w, b));
  return mitchell_antilog(w, lsum);
}

u64 mul_alm_loa(int w, const std::vector<u64>& p, u64 a, u64 b) {
  return mul_alm(w, static_cast<int>(p[0]), a, b, "loa");
}
// TODO: swap in a real MAA3 cell model once its truth table is fixed; the
// registry entry currently reuses the lower-part OR rule.
u64 mul_alm_maa3(int w, const std::vector<u64>& p, u64 a, u64 b) {
  return mul_alm(w, static_cast<int>(p[0]), a, b, "loa");
}
u64 mul_alm_soa(int w, const std::vector<u64>& p, u64 a, u64 b) {
  return mul_alm(w, static_cast<int>(p[0]), a, b, "soa");
}

// The multiplier operand is split into nibbles; each nibble's odd factor is
// replaced by the nearest-below member of the odd alphabet {1,3,..,2A-1}.
u64 asm_replace_nibble(u64 v, u64 alphabets) {
  if (v == 0) return 0;
  int s = __builtin_ctzll(v);
  u64 odd = v >> s;
  u64 top = 2 * alphabets - 1;
  if (odd > top) odd = top;
  return odd << s;
}

u64 mul_asm(int w, const std::vector<u64>& p, u64 a, u64 b) {
  int nw = static_cast<int>(p[0]);
  u64 alphabets = p[1];
  u64 acc = 0;
  for (int pos = 0; pos < w; pos += nw) {
    u64 nib = (b >> pos) & mask_bits(nw);
    acc += (a * asm_replace_nibble(nib, alphabets)) << pos;
  }
  return acc;
}

u64 truncate_low(u64 x, int bits) { return x & ~mask_bits(bits); }

u64 mul_dralm(int w, const std::vector<u64>& p, u64 a, u64 b) {
  int dw = static_cast<int>(p[0]);
  u64 ta = truncate_low(a, dw), tb = truncate_low(b, dw);
  if (ta == 0 || tb == 0) return 0;
  u128 lsum =
      static_cast<u128>(mitchell_log(w, ta)) + mitchell_log(w, tb);
  return mitchell_antilog(w, lsum);
}

// nearest power of two, ties rounding up; may reach 2^W
int roba_round_shift(u64 x) {
  int pos = leading_one(x);
  u64 rem = x - (u64{1} << pos);
  return (2 * rem >= (u64{1} << pos)) ? pos + 1 : pos;
}

u64 mul_roba(int, const std::vector<u64>&, u64 a, u64 b) {
  if (a == 0 || b == 0) return 0;
  u64 ar = u64{1} << roba_round_shift(a);
  u64 br = u64{1} << roba_round_shift(b);
  // exact in 2W bits; the wraparound of the intermediate terms cancels
  return ar * b + br * a - ar * br;
}

u64 drum_segment(u64 x, int k, int* shift_out) {
  int pos = leading_one(x);
  if (pos < k) {
    *shift_out = 0;
    return x;
  }
  int sh = pos - k + 1;
  *shift_out = sh;
  return (x >> sh) | 1;  // forced low bit unbiases the truncation
}

u64 mul_drum(int, const std::vector<u64>& p, u64 a, u64 b) {
  if (a == 0 || b == 0) return 0;
  int k = static_cast<int>(p[0]);
  int sa = 0, sb = 0;
  u64 ma = drum_segment(a, k, &sa), mb = drum_segment(b, k, &sb);
  return (ma * mb) << (sa + sb);
}

u64 mul_trunc(int, const std::vector<u64>& p, u64 a, u64 b) {
  int dw = static_cast<int>(p[0]);
  return truncate_low(a, dw) * truncate_low(b, dw);
}

// ---- conditioning (PAU) and core (APE) rules ----

ConditionedOperand cond_identity(u64 x) { return {x, 0, 1, x}; }

ConditionedOperand cond_drum(int, const std::vector<u64>& p, u64 x) {
  if (x == 0) return {0, 0, 1, 0};
  int sh = 0;
  u64 m = drum_segment(x, static_cast<int>(p[0]), &sh);
  return {m, sh, 1, x};
}

ConditionedOperand cond_dralm(int, const std::vector<u64>& p, u64 x) {
  int dw = static_cast<int>(p[0]);
  return {x >> dw, dw, 1, x};
}

ConditionedOperand cond_roba(int, const std::vector<u64>&, u64 x) {
  if (x == 0) return {0, 0, 1, 0};
  return {1, roba_round_shift(x), 1, x};
}

u64 core_drum(int, const std::vector<u64>&, const ConditionedOperand& ca,
              const ConditionedOperand& cb) {
  return (ca.mantissa * cb.mantissa) << (ca.shift + cb.shift);
}

u64 core_dralm(int w, const std::vector<u64>&, const ConditionedOperand& ca,
               const ConditionedOperand& cb) {
  u64 ta = ca.mantissa << ca.shift, tb = cb.mantissa << cb.shift;
  if (ta == 0 || tb == 0) return 0;
  u128 lsum = static_cast<u128>(mitchell_log(w, ta)) + mitchell_log(w, tb);
  return mitchell_antilog(w, lsum);
}

u64 core_roba(int, const std::vector<u64>&, const ConditionedOperand& ca,
              const ConditionedOperand& cb) {
  if (ca.aux == 0 || cb.aux == 0) return 0;
  u64 ar = ca.mantissa << ca.shift, br = cb.mantissa << cb.shift;
  return ar * cb.aux + br * ca.aux - ar * br;
}

// ---- registries ----

std::vector<AdderRule>& adder_registry() {
  static std::vector<AdderRule> rules = {
      {"exact", {}, add_exact},
      {"loa", {{"m", d_half_w, ok_m_adder}}, add_loa_c},
      {"loa_nocarry", {{"m", d_half_w, ok_m_adder}}, add_loa_nc},
      {"trunc", {{"m", d_half_w, ok_m_adder}}, add_trunc},
      {"soa", {{"m", d_half_w, ok_m_adder}}, add_soa},
  };
  return rules;
}

std::vector<MultRule>& mult_registry() {
  static std::vector<MultRule> rules = {
      {"exact", {}, true, mul_exact, nullptr, nullptr},
      {"bam", {{"vbl", d_half_w, ok_vbl}}, true, mul_bam, nullptr, nullptr},
      {"alm_loa", {{"m", d_half_w, ok_m_log}}, true, mul_alm_loa, nullptr,
       nullptr},
      {"alm_maa3", {{"m", d_half_w, ok_m_log}}, true, mul_alm_maa3, nullptr,
       nullptr},
      {"alm_soa", {{"m", d_half_w, ok_m_log}}, true, mul_alm_soa, nullptr,
       nullptr},
      {"asm",
       {{"nibble_width", d_four, ok_nibble}, {"alphabets", d_four, ok_alphabets}},
       true, mul_asm, nullptr, nullptr},
      {"dralm", {{"mult_dw", d_half_w, ok_dralm_dw}}, false, mul_dralm,
       cond_dralm, core_dralm},
      {"roba", {{"round_width", d_one, ok_round_width}}, false, mul_roba,
       cond_roba, core_roba},
      {"drum", {{"k", d_drum_k, ok_drum_k}}, false, mul_drum, cond_drum,
       core_drum},
      {"trunc", {{"mult_dw", d_half_w, ok_trunc_dw}}, true, mul_trunc, nullptr,
       nullptr},
  };
  return rules;
}

template <class Rule>
const Rule* find_rule(const std::vector<Rule>& rules, std::string_view kind) {
  std::string k = to_lower(std::string(kind));
  for (const auto& r : rules)
    if (r.kind == k) return &r;
  return nullptr;
}

template <class Rule, class Unit>
Unit resolve_unit(const std::vector<Rule>& rules, const char* family,
                  const std::string& kind, int w,
                  const std::map<std::string, u64>& overrides) {
  const Rule* r = find_rule(rules, kind);
  if (!r) throw ParamError("unknown " + std::string(family) + " kind: " + kind);
  Unit u;
  u.kind = r->kind;
  for (const auto& ps : r->params) {
    auto it = overrides.find(ps.name);
    u.params.push_back(it != overrides.end() ? it->second : ps.def(w));
  }
  for (const auto& [name, _] : overrides) {
    bool known = false;
    for (const auto& ps : r->params) known |= (ps.name == name);
    if (!known)
      throw ParamError("unknown param '" + name + "' for " + r->kind);
  }
  return u;
}

template <class Rule, class Unit>
void check_unit(const std::vector<Rule>& rules, const char* family,
                const Unit& u, int w, int min_w, int max_w) {
  if (w < min_w || w > max_w)
    throw ParamError(std::string(family) + " width " + std::to_string(w) +
                     " out of range");
  const Rule* r = find_rule(rules, u.kind);
  if (!r) throw ParamError("unknown " + std::string(family) + " kind: " + u.kind);
  if (u.params.size() != r->params.size())
    throw ParamError("param count mismatch for " + u.kind);
  for (std::size_t i = 0; i < u.params.size(); ++i)
    if (!r->params[i].ok(u.params[i], w))
      throw ParamError(u.kind + ": param " + r->params[i].name + "=" +
                       std::to_string(u.params[i]) + " out of range at width " +
                       std::to_string(w));
}

template <class Rule, class Unit>
Unit parse_unit_text(const std::vector<Rule>& rules, const char* family,
                     const std::string& text, int w) {
  std::string t = trim(text);
  std::string name = t;
  std::map<std::string, u64> overrides;
  auto colon = t.find(':');
  if (colon != std::string::npos) {
    name = t.substr(0, colon);
    for (const auto& piece : split(t.substr(colon + 1), ',')) {
      auto eq = piece.find('=');
      if (eq == std::string::npos)
        throw ParamError("bad param assignment '" + piece + "' in " + text);
      std::string pname = to_lower(trim(piece.substr(0, eq)));
      std::string pval = trim(piece.substr(eq + 1));
      try {
        std::size_t used = 0;
        u64 v = std::stoull(pval, &used);
        if (used != pval.size()) throw std::invalid_argument(pval);
        overrides[pname] = v;
      } catch (const std::exception&) {
        throw ParamError("bad param value '" + pval + "' in " + text);
      }
    }
  }
  return resolve_unit<Rule, Unit>(rules, family, trim(name), w, overrides);
}

template <class Rule, class Unit>
std::string render_unit(const std::vector<Rule>& rules, const Unit& u) {
  const Rule* r = find_rule(rules, u.kind);
  if (!r || u.params.size() != r->params.size())
    throw ParamError("cannot render malformed unit " + u.kind);
  std::ostringstream os;
  os << r->kind;
  for (std::size_t i = 0; i < u.params.size(); ++i)
    os << (i == 0 ? ':' : ',') << r->params[i].name << '=' << u.params[i];
  return os.str();
}

}  // namespace

const AdderRule* find_adder_rule(std::string_view kind) {
  return find_rule(adder_registry(), kind);
}
const MultRule* find_mult_rule(std::string_view kind) {
  return find_rule(mult_registry(), kind);
}
const std::vector<AdderRule>& adder_rules() { return adder_registry(); }
const std::vector<MultRule>& mult_rules() { return mult_registry(); }

void register_adder_rule(const AdderRule& r) {
  if (find_adder_rule(r.kind)) throw ParamError("duplicate adder " + r.kind);
  AdderRule copy = r;
  copy.kind = to_lower(copy.kind);
  adder_registry().push_back(copy);
}

void register_mult_rule(const MultRule& r) {
  if (find_mult_rule(r.kind)) throw ParamError("duplicate mult " + r.kind);
  MultRule copy = r;
  copy.kind = to_lower(copy.kind);
  mult_registry().push_back(copy);
}

AdderUnit make_adder(const std::string& kind, int w,
                     const std::map<std::string, u64>& overrides) {
  auto u = resolve_unit<AdderRule, AdderUnit>(adder_registry(), "adder", kind,
                                              w, overrides);
  validate_adder(u, w);
  return u;
}

MultUnit make_mult(const std::string& kind, int w,
                   const std::map<std::string, u64>& overrides) {
  auto u = resolve_unit<MultRule, MultUnit>(mult_registry(), "multiplier",
                                            kind, w, overrides);
  validate_mult(u, w);
  return u;
}

void validate_adder(const AdderUnit& u, int w) {
  check_unit(adder_registry(), "adder", u, w, kMinAdderWidth, kMaxAdderWidth);
}

void validate_mult(const MultUnit& u, int w) {
  check_unit(mult_registry(), "multiplier", u, w, kMinMultWidth, kMaxMultWidth);
}

u64 adder_param(const AdderUnit& u, std::string_view name) {
  const AdderRule* r = find_adder_rule(u.kind);
  if (r)
    for (std::size_t i = 0; i < r->params.size(); ++i)
      if (r->params[i].name == name && i < u.params.size()) return u.params[i];
  throw ParamError("no param '" + std::string(name) + "' on " + u.kind);
}

u64 mult_param(const MultUnit& u, std::string_view name) {
  const MultRule* r = find_mult_rule(u.kind);
  if (r)
    for (std::size_t i = 0; i < r->params.size(); ++i)
      if (r->params[i].name == name && i < u.params.size()) return u.params[i];
  throw ParamError("no param '" + std::string(name) + "' on " + u.kind);
}

AdderUnit parse_adder_text(const std::string& text, int w) {
  auto u = parse_unit_text<AdderRule, AdderUnit>(adder_registry(), "adder",
                                                 text, w);
  validate_adder(u, w);
  return u;
}

MultUnit parse_mult_text(const std::string& text, int w) {
  auto u = parse_unit_text<MultRule, MultUnit>(mult_registry(), "multiplier",
                                               text, w);
  validate_mult(u, w);
  return u;
}

std::string render_adder(const AdderUnit& u) {
  return render_unit(adder_registry(), u);
}

std::string render_mult(const MultUnit& u) {
  return render_unit(mult_registry(), u);
}

u128 approx_add(const AdderUnit& u, int w, u64 a, u64 b) {
  const AdderRule* r = find_adder_rule(u.kind);
  if (!r) throw ParamError("unknown adder kind: " + u.kind);
  a &= mask_bits(w);
  b &= mask_bits(w);
  return r->eval(w, u.params, a, b);
}

u64 approx_mul(const MultUnit& u, int w, u64 a, u64 b) {
  const MultRule* r = find_mult_rule(u.kind);
  if (!r) throw ParamError("unknown multiplier kind: " + u.kind);
  a &= mask_bits(w);
  b &= mask_bits(w);
  if (a == 0 || b == 0) return 0;
  return r->eval(w, u.params, a, b);
}

ConditionedOperand pau_condition(const MultUnit& u, int w, u64 x) {
  const MultRule* r = find_mult_rule(u.kind);
  if (!r) throw ParamError("unknown multiplier kind: " + u.kind);
  x &= mask_bits(w);
  if (r->identity_conditioning || !r->condition) return cond_identity(x);
  return r->condition(w, u.params, x);
}

u64 ape_core_mul(const MultUnit& u, int w, const ConditionedOperand& ca,
                 const ConditionedOperand& cb) {
  const MultRule* r = find_mult_rule(u.kind);
  if (!r) throw ParamError("unknown multiplier kind: " + u.kind);
  if (r->identity_conditioning || !r->core)
    return approx_mul(u, w, ca.mantissa, cb.mantissa);
  if ((ca.mantissa == 0 && ca.aux == 0) || (cb.mantissa == 0 && cb.aux == 0))
    return 0;
  return r->core(w, u.params, ca, cb);
}

bool has_identity_conditioning(const MultUnit& u) {
  const MultRule* r = find_mult_rule(u.kind);
  if (!r) throw ParamError("unknown multiplier kind: " + u.kind);
  return r->identity_conditioning;
}

int mult_width(int dw, int ww) { return std::max(dw, ww); }

int default_acc_width(int dw, int ww, int k_max) {
  return std::min(dw + ww + clog2(static_cast<u64>(k_max)), 64);
}

MacResult mac_step(const MacConfig& cfg, u64 acc, u64 a, u64 b) {
  int w = mult_width(cfg.dw, cfg.ww);
  u64 prod = approx_mul(cfg.mult, w, a & mask_bits(cfg.dw), b & mask_bits(cfg.ww));
  u128 sum = approx_add(cfg.adder, cfg.acc_width, acc & mask_bits(cfg.acc_width),
                        prod & mask_bits(cfg.acc_width));
  MacResult r;
  r.wrapped = (sum >> cfg.acc_width) != 0;
  r.value = static_cast<u64>(sum) & mask_bits(cfg.acc_width);
  return r;
}

}  // namespace tpugen
