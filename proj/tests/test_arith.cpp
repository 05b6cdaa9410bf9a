#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tpugen/arith.hpp"

#include <vector>

using namespace tpugen;

// =====================================================================
// Independent oracles. These recompute each rule with a different code
// shape (bit-serial loops, column counting, repeated doubling) so that a
// shared bug between model and test is unlikely.
// =====================================================================

namespace {

// ripple-carry bit loop, OR substituted below the boundary
u128 oracle_loa(int w, int m, u64 a, u64 b, bool carry_in) {
  u128 out = 0;
  int carry = 0;
  for (int i = 0; i < w; ++i) {
    int ai = (a >> i) & 1, bi = (b >> i) & 1;
    int bit;
    if (i < m) {
      bit = ai | bi;
      if (carry_in && i == m - 1) carry = ai & bi;
    } else {
      int s = ai + bi + carry;
      bit = s & 1;
      carry = s >> 1;
    }
    out |= static_cast<u128>(bit) << i;
  }
  return out | (static_cast<u128>(carry) << w);
}

// per-column popcount accumulation
u64 oracle_bam(int w, int vbl, u64 a, u64 b) {
  std::vector<int> col(2 * w, 0);
  for (int i = 0; i < w; ++i)
    for (int j = 0; j < w; ++j)
      if (((a >> i) & 1) && ((b >> j) & 1) && i + j >= vbl) col[i + j]++;
  u64 v = 0;
  for (int c = 2 * w - 1; c >= 0; --c) v = 2 * v + col[c];
  return v;
}

// log via shift-up loop, sum exact, antilog via shift loop
u64 oracle_mitchell(int w, u64 a, u64 b) {
  if (a == 0 || b == 0) return 0;
  auto log_of = [w](u64 x) {
    int k = 0;
    u64 n = x;
    while (n >= (u64{1} << (k + 1))) ++k;
    while (n < (u64{1} << (w - 1))) n <<= 1;  // normalize mantissa
    return std::pair<int, u64>{k, n - (u64{1} << (w - 1))};
  };
  auto [ka, fa] = log_of(a);
  auto [kb, fb] = log_of(b);
  u64 fsum = fa + fb;
  int kk = ka + kb;
  if (fsum >= (u64{1} << (w - 1))) {
    fsum -= u64{1} << (w - 1);
    kk += 1;
  }
  u64 r = (u64{1} << (w - 1)) + fsum;
  for (int i = w - 1; i < kk; ++i) r <<= 1;
  for (int i = kk; i < w - 1; ++i) r >>= 1;
  return r;
}

u64 oracle_drum(int w, int k, u64 a, u64 b) {
  auto seg = [k](u64 x) {
    int msb = 0;
    for (int i = 0; i < 64; ++i)
      if ((x >> i) & 1) msb = i;
    if (msb < k) return std::pair<u64, int>{x, 0};
    int sh = msb - k + 1;
    return std::pair<u64, int>{(x >> sh) | 1, sh};
  };
  auto [ma, sa] = seg(a);
  auto [mb, sb] = seg(b);
  (void)w;
  return (ma * mb) << (sa + sb);
}

u64 oracle_roba_round(u64 x) {
  u64 p = 1;
  while (p * 2 <= x) p *= 2;
  // ties toward the larger power
  return (x - p) * 2 >= p ? p * 2 : p;
}

u64 oracle_roba(u64 a, u64 b) {
  if (a == 0 || b == 0) return 0;
  u64 ar = oracle_roba_round(a), br = oracle_roba_round(b);
  return ar * b + br * a - ar * br;
}

u64 oracle_asm(int w, int nw, u64 alphabets, u64 a, u64 b) {
  u64 total = 0;
  for (int pos = 0; pos < w; pos += nw) {
    u64 nib = (b >> pos) & ((u64{1} << nw) - 1);
    if (nib == 0) continue;
    u64 pow = 1, odd = nib;
    while (odd % 2 == 0) {
      odd /= 2;
      pow *= 2;
    }
    u64 best = 1;  // the largest alphabet member not above the odd factor
    for (u64 al = 1; al <= 2 * alphabets - 1; al += 2)
      if (al <= odd) best = al;
    total += (a * best * pow) << pos;
  }
  return total;
}

}  // namespace

// =====================================================================
// Frozen single-point examples, hand-evaluated from the unit rules.
// =====================================================================

TEST_CASE("adder point examples") {
  auto exact = make_adder("exact", 8);
  CHECK(approx_add(exact, 8, 3, 5) == 8);

  auto loa0 = make_adder("loa", 8, {{"m", 0}});
  CHECK(approx_add(loa0, 8, 200, 100) == 300);

  auto loa4 = make_adder("loa", 8, {{"m", 4}});
  CHECK(approx_add(loa4, 8, 15, 1) == 15);   // exact 16
  CHECK(approx_add(loa4, 8, 8, 8) == 24);    // exact 16, carry-in fires

  auto loanc4 = make_adder("loa_nocarry", 8, {{"m", 4}});
  CHECK(approx_add(loanc4, 8, 8, 8) == 8);   // carry swallowed

  auto tr4 = make_adder("trunc", 8, {{"m", 4}});
  CHECK(approx_add(tr4, 8, 15, 1) == 0);
  auto soa4 = make_adder("soa", 8, {{"m", 4}});
  CHECK(approx_add(soa4, 8, 15, 1) == 15);
  CHECK(approx_add(soa4, 8, 16, 16) == 47);  // 32 | 15
}

TEST_CASE("multiplier point examples") {
  CHECK(approx_mul(make_mult("bam", 4, {{"vbl", 0}}), 4, 3, 3) == 9);
  CHECK(approx_mul(make_mult("bam", 4, {{"vbl", 2}}), 4, 3, 3) == 4);

  auto alm0 = make_mult("alm_loa", 8, {{"m", 0}});
  CHECK(approx_mul(alm0, 8, 3, 3) == 8);     // exact 9
  CHECK(approx_mul(alm0, 8, 8, 8) == 64);    // powers of two stay exact

  auto drum3 = make_mult("drum", 8, {{"k", 3}});
  CHECK(approx_mul(drum3, 8, 12, 10) == 140);  // exact 120

  auto roba = make_mult("roba", 8);
  CHECK(approx_mul(roba, 8, 8, 5) == 40);    // power-of-two operand is exact

  auto dralm4 = make_mult("dralm", 8, {{"mult_dw", 4}});
  CHECK(approx_mul(dralm4, 8, 19, 17) == 256);  // exact 323
  auto trunc4 = make_mult("trunc", 8, {{"mult_dw", 4}});
  CHECK(approx_mul(trunc4, 8, 19, 17) == 256);
}

TEST_CASE("conditioning point examples") {
  auto drum3 = make_mult("drum", 8, {{"k", 3}});
  auto c12 = pau_condition(drum3, 8, 12);
  CHECK(c12.mantissa == 7);
  CHECK(c12.shift == 1);
  auto c10 = pau_condition(drum3, 8, 10);
  CHECK(ape_core_mul(drum3, 8, c12, c10) == 140);

  auto exact = make_mult("exact", 8);
  auto c42 = pau_condition(exact, 8, 42);
  CHECK(c42.mantissa == 42);
  CHECK(c42.shift == 0);
  CHECK(ape_core_mul(exact, 8, pau_condition(exact, 8, 3),
                     pau_condition(exact, 8, 5)) == 15);

  auto roba = make_mult("roba", 8);
  auto c6 = pau_condition(roba, 8, 6);
  CHECK(c6.mantissa == 1);
  CHECK(c6.shift == 3);  // rounded value 8, tie rounds up
  CHECK(ape_core_mul(roba, 8, pau_condition(roba, 8, 8),
                     pau_condition(roba, 8, 5)) == 40);
}

TEST_CASE("mac point examples") {
  MacConfig cfg;
  cfg.dw = cfg.ww = 8;
  cfg.acc_width = default_acc_width(8, 8);
  cfg.mult = make_mult("exact", 8);
  cfg.adder = make_adder("exact", cfg.acc_width);
  CHECK(cfg.acc_width == 28);
  CHECK(mac_step(cfg, 10, 3, 4).value == 22);
  CHECK_FALSE(mac_step(cfg, 10, 3, 4).wrapped);

  // zero product leaves the accumulator untouched
  CHECK(mac_step(cfg, 77, 0, 9).value == 77);
  CHECK(mac_step(cfg, 77, 9, 0).value == 77);

  // fully OR-composed accumulator add
  MacConfig orcfg = cfg;
  orcfg.adder = make_adder("loa", cfg.acc_width,
                           {{"m", static_cast<u64>(cfg.acc_width)}});
  CHECK(mac_step(orcfg, 0, 1, 1).value == 1);
  CHECK(mac_step(orcfg, 6, 1, 3).value == 7);  // 6 | 3

  // wrap flag at a narrow accumulator
  MacConfig narrow = cfg;
  narrow.acc_width = 16;
  narrow.adder = make_adder("exact", 16);
  auto r = mac_step(narrow, 0xFFFF, 255, 255);
  CHECK(r.wrapped);
  CHECK(r.value == ((0xFFFFull + 255 * 255) & 0xFFFF));
}

// =====================================================================
// Exhaustive W=8 oracle comparisons.
// =====================================================================

TEST_CASE("loa family matches bit-serial oracle exhaustively") {
  const int w = 8;
  for (int m : {0, 1, 3, 4, 8}) {
    auto loa = make_adder("loa", w, {{"m", static_cast<u64>(m)}});
    auto loanc = make_adder("loa_nocarry", w, {{"m", static_cast<u64>(m)}});
    for (u64 a = 0; a < 256; ++a)
      for (u64 b = 0; b < 256; ++b) {
        if (approx_add(loa, w, a, b) != oracle_loa(w, m, a, b, true)) {
          FAIL("loa mismatch at m=" << m << " a=" << a << " b=" << b);
        }
        if (approx_add(loanc, w, a, b) != oracle_loa(w, m, a, b, false)) {
          FAIL("loa_nocarry mismatch at m=" << m << " a=" << a << " b=" << b);
        }
      }
  }
}

TEST_CASE("trunc and soa adders follow their closed forms") {
  const int w = 8;
  for (int m : {1, 4, 7}) {
    auto tr = make_adder("trunc", w, {{"m", static_cast<u64>(m)}});
    auto so = make_adder("soa", w, {{"m", static_cast<u64>(m)}});
    for (u64 a = 0; a < 256; ++a)
      for (u64 b = 0; b < 256; ++b) {
        u128 expect = (((a >> m) + (b >> m)) << m);
        if (approx_add(tr, w, a, b) != expect) FAIL("trunc mismatch");
        if (approx_add(so, w, a, b) != (expect | mask_bits(m)))
          FAIL("soa mismatch");
      }
  }
}

TEST_CASE("bam matches column-count oracle exhaustively") {
  const int w = 8;
  for (int vbl : {0, 2, 4, 8, 15}) {
    auto bam = make_mult("bam", w, {{"vbl", static_cast<u64>(vbl)}});
    for (u64 a = 0; a < 256; ++a)
      for (u64 b = 0; b < 256; ++b)
        if (approx_mul(bam, w, a, b) != oracle_bam(w, vbl, a, b))
          FAIL("bam mismatch at vbl=" << vbl << " a=" << a << " b=" << b);
  }
}

TEST_CASE("exact-log multipliers match the independent mitchell oracle") {
  const int w = 8;
  auto alm = make_mult("alm_loa", w, {{"m", 0}});
  auto dralm0 = make_mult("dralm", w, {{"mult_dw", 0}});
  for (u64 a = 0; a < 256; ++a)
    for (u64 b = 0; b < 256; ++b) {
      u64 want = oracle_mitchell(w, a, b);
      if (approx_mul(alm, w, a, b) != want)
        FAIL("alm_loa m=0 mismatch at a=" << a << " b=" << b);
      if (approx_mul(dralm0, w, a, b) != want)
        FAIL("dralm dw=0 mismatch at a=" << a << " b=" << b);
    }
}

TEST_CASE("mitchell m=0 underestimates with bounded relative error") {
  const int w = 8;
  for (const char* kind : {"alm_loa", "alm_maa3", "alm_soa"}) {
    auto u = make_mult(kind, w, {{"m", 0}});
    for (u64 a = 1; a < 256; ++a)
      for (u64 b = 1; b < 256; ++b) {
        u64 approx = approx_mul(u, w, a, b);
        u64 exact = a * b;
        if (approx > exact) FAIL(kind << " overestimates at a=" << a << " b=" << b);
        // 1000*(exact-approx) <= 112*exact  <=>  rel err <= 11.2%
        if (1000 * (exact - approx) > 112 * exact)
          FAIL(kind << " bound break at a=" << a << " b=" << b);
      }
  }
}

TEST_CASE("drum matches segment oracle exhaustively") {
  const int w = 8;
  for (int k : {2, 3, 4, 6, 8}) {
    auto drum = make_mult("drum", w, {{"k", static_cast<u64>(k)}});
    for (u64 a = 0; a < 256; ++a)
      for (u64 b = 0; b < 256; ++b) {
        u64 want = (a == 0 || b == 0) ? 0 : oracle_drum(w, k, a, b);
        if (approx_mul(drum, w, a, b) != want)
          FAIL("drum mismatch at k=" << k << " a=" << a << " b=" << b);
      }
  }
}

TEST_CASE("roba matches rounding oracle exhaustively") {
  const int w = 8;
  auto roba = make_mult("roba", w);
  auto roba4 = make_mult("roba", w, {{"round_width", 4}});
  for (u64 a = 0; a < 256; ++a)
    for (u64 b = 0; b < 256; ++b) {
      u64 want = oracle_roba(a, b);
      if (approx_mul(roba, w, a, b) != want)
        FAIL("roba mismatch at a=" << a << " b=" << b);
      // shifter-width scaling never changes the computed value
      if (approx_mul(roba4, w, a, b) != want)
        FAIL("roba round_width drift at a=" << a << " b=" << b);
    }
}

TEST_CASE("asm matches alphabet oracle and full alphabet is exact") {
  const int w = 8;
  auto dflt = make_mult("asm", w);  // nibble_width=4, alphabets=4
  auto full = make_mult("asm", w, {{"nibble_width", 4}, {"alphabets", 8}});
  for (u64 a = 0; a < 256; ++a)
    for (u64 b = 0; b < 256; ++b) {
      u64 got = approx_mul(dflt, w, a, b);
      u64 want = (a == 0 || b == 0) ? 0 : oracle_asm(w, 4, 4, a, b);
      if (got != want) FAIL("asm mismatch at a=" << a << " b=" << b);
      if (got > a * b) FAIL("asm overestimates at a=" << a << " b=" << b);
      if (approx_mul(full, w, a, b) != a * b)
        FAIL("full-alphabet asm not exact at a=" << a << " b=" << b);
    }
}

TEST_CASE("asm conditions only the second operand") {
  auto u = make_mult("asm", 8);
  CHECK(approx_mul(u, 8, 13, 11) != approx_mul(u, 8, 11, 13));
}

TEST_CASE("exactness reductions collapse to the exact unit") {
  const int w = 8;
  auto exact_m = make_mult("exact", w);
  std::vector<MultUnit> exact_mults = {
      make_mult("bam", w, {{"vbl", 0}}),
      make_mult("trunc", w, {{"mult_dw", 0}}),
      make_mult("drum", w, {{"k", 8}}),
      make_mult("asm", w, {{"nibble_width", 4}, {"alphabets", 8}}),
  };
  std::vector<AdderUnit> exact_adds;
  for (const char* kind : {"loa", "loa_nocarry", "trunc", "soa"})
    exact_adds.push_back(make_adder(kind, w, {{"m", 0}}));

  for (u64 a = 0; a < 256; ++a)
    for (u64 b = 0; b < 256; ++b) {
      for (const auto& u : exact_mults)
        if (approx_mul(u, w, a, b) != approx_mul(exact_m, w, a, b))
          FAIL(u.kind << " not exact at a=" << a << " b=" << b);
      for (const auto& u : exact_adds)
        if (approx_add(u, w, a, b) != a + b)
          FAIL(u.kind << " not exact at a=" << a << " b=" << b);
    }
}

TEST_CASE("underestimating families never exceed the exact product") {
  const int w = 8;
  std::vector<MultUnit> units = {
      make_mult("bam", w),
      make_mult("bam", w, {{"vbl", 10}}),
      make_mult("trunc", w),
      make_mult("dralm", w),
      make_mult("dralm", w, {{"mult_dw", 2}}),
  };
  for (const auto& u : units)
    for (u64 a = 0; a < 256; ++a)
      for (u64 b = 0; b < 256; ++b)
        if (approx_mul(u, w, a, b) > a * b)
          FAIL(render_mult(u) << " overestimates at a=" << a << " b=" << b);
}

TEST_CASE("pau/ape composition equals the monolithic model for every kind") {
  const int w = 8;
  std::vector<MultUnit> units;
  for (const auto& rule : mult_rules()) units.push_back(make_mult(rule.kind, w));
  units.push_back(make_mult("drum", w, {{"k", 3}}));
  units.push_back(make_mult("dralm", w, {{"mult_dw", 2}}));

  for (const auto& u : units)
    for (u64 a = 0; a < 256; ++a)
      for (u64 b = 0; b < 256; ++b) {
        auto ca = pau_condition(u, w, a);
        auto cb = pau_condition(u, w, b);
        if (ape_core_mul(u, w, ca, cb) != approx_mul(u, w, a, b))
          FAIL(render_mult(u) << " composition break at a=" << a << " b=" << b);
      }
}

TEST_CASE("zero annihilation holds for every registered kind") {
  const int w = 8;
  for (const auto& rule : mult_rules()) {
    auto u = make_mult(rule.kind, w);
    for (u64 x = 0; x < 256; ++x) {
      CHECK(approx_mul(u, w, 0, x) == 0);
      CHECK(approx_mul(u, w, x, 0) == 0);
    }
  }
}

// =====================================================================
// Widths beyond 8, registry behavior, mini-syntax.
// =====================================================================

TEST_CASE("wide-width sanity") {
  // 64-bit adder: result needs the 65th bit
  auto exact = make_adder("exact", 64);
  u128 sum = approx_add(exact, 64, ~u64{0}, ~u64{0});
  CHECK(static_cast<u64>(sum >> 64) == 1);
  CHECK(static_cast<u64>(sum) == ~u64{0} - 1);

  auto loa = make_adder("loa", 64, {{"m", 64}});
  CHECK(static_cast<u64>(approx_add(loa, 64, 6, 3)) == 7);

  // 32-bit multipliers stay inside 64 bits
  auto drum = make_mult("drum", 32, {{"k", 6}});
  u64 big = 0xFFFFFFFFull;
  CHECK(approx_mul(drum, 32, big, big) <= ~u64{0});
  auto exm = make_mult("exact", 32);
  CHECK(approx_mul(exm, 32, big, big) == big * big);

  auto roba = make_mult("roba", 32);
  CHECK(approx_mul(roba, 32, u64{1} << 31, 12345) == (u64{12345} << 31));

  auto alm = make_mult("alm_loa", 32, {{"m", 0}});
  CHECK(approx_mul(alm, 32, u64{1} << 20, u64{1} << 10) == u64{1} << 30);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(make_adder("nope", 8), ParamError);
  CHECK_THROWS_AS(make_adder("loa", 8, {{"m", 9}}), ParamError);
  CHECK_THROWS_AS(make_adder("loa", 8, {{"q", 1}}), ParamError);
  CHECK_THROWS_AS(make_adder("loa", 1), ParamError);
  CHECK_THROWS_AS(make_adder("loa", 65), ParamError);
  CHECK_THROWS_AS(make_mult("drum", 8, {{"k", 1}}), ParamError);
  CHECK_THROWS_AS(make_mult("drum", 8, {{"k", 9}}), ParamError);
  CHECK_THROWS_AS(make_mult("dralm", 8, {{"mult_dw", 8}}), ParamError);
  CHECK_NOTHROW(make_mult("trunc", 8, {{"mult_dw", 8}}));
  CHECK_THROWS_AS(make_mult("asm", 8, {{"nibble_width", 3}}), ParamError);
  CHECK_THROWS_AS(make_mult("exact", 33), ParamError);

  // defaults resolve relative to the width
  CHECK(adder_param(make_adder("loa", 8), "m") == 4);
  CHECK(adder_param(make_adder("loa", 16), "m") == 8);
  CHECK(mult_param(make_mult("drum", 8), "k") == 4);
  CHECK(mult_param(make_mult("bam", 8), "vbl") == 4);
}

TEST_CASE("unit mini-syntax parse and canonical render") {
  auto u = parse_mult_text("drum:k=6", 8);
  CHECK(u.kind == "drum");
  CHECK(mult_param(u, "k") == 6);
  CHECK(render_mult(u) == "drum:k=6");

  CHECK(parse_mult_text("DRUM:K=6", 8) == u);
  CHECK(parse_mult_text(" drum : k = 6 ", 8) == u);

  auto a = parse_adder_text("loa:m=4", 8);
  CHECK(render_adder(a) == "loa:m=4");
  CHECK(render_adder(parse_adder_text("LOA", 8)) == "loa:m=4");
  CHECK(render_adder(parse_adder_text("exact", 8)) == "exact");
  CHECK(render_mult(parse_mult_text("asm", 8)) == "asm:nibble_width=4,alphabets=4");

  CHECK_THROWS_AS(parse_mult_text("drum:k", 8), ParamError);
  CHECK_THROWS_AS(parse_mult_text("drum:k=x", 8), ParamError);
  CHECK_THROWS_AS(parse_mult_text("warp:k=1", 8), ParamError);

  // parse-render round trip across the registry
  for (const auto& rule : mult_rules()) {
    auto r = make_mult(rule.kind, 16);
    CHECK(parse_mult_text(render_mult(r), 16) == r);
  }
  for (const auto& rule : adder_rules()) {
    auto r = make_adder(rule.kind, 16);
    CHECK(parse_adder_text(render_adder(r), 16) == r);
  }
}

TEST_CASE("registry rejects duplicates and accepts extensions") {
  CHECK_THROWS_AS(register_mult_rule({"drum", {}, true, nullptr, nullptr, nullptr}),
                  ParamError);
  CHECK(find_mult_rule("DRUM") != nullptr);
  CHECK(find_adder_rule("missing") == nullptr);
}
