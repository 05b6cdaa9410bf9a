#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tpugen/metrics.hpp"
#include "tpugen/simulator.hpp"

#include <cmath>

using namespace tpugen;

TEST_CASE("exact units report zero error") {
  auto r = exhaustive_report(make_mult("exact", 4), 4);
  CHECK(r.error_rate == 0);
  CHECK(r.med == 0);
  CHECK(r.max_ed == 0);
  CHECK(r.n_evaluated == 256);
  CHECK(r.mode == "exhaustive");

  auto ra = exhaustive_report(make_adder("exact", 6), 6);
  CHECK(ra.error_rate == 0);
}

TEST_CASE("full truncation mean equals the product mean") {
  // every approximation is 0, so med = mean(a*b) = 7.5^2
  auto r = exhaustive_report(make_mult("trunc", 4, {{"mult_dw", 4}}), 4);
  CHECK(r.med == doctest::Approx(56.25).epsilon(1e-12));
  CHECK(r.error_rate == doctest::Approx(225.0 / 256));  // only zero pairs agree
}

TEST_CASE("bam report equals an independent recomputation") {
  const int w = 8;
  auto bam = make_mult("bam", w, {{"vbl", 8}});
  auto r = exhaustive_report(bam, w);

  u64 ed_sum = 0, max_ed = 0, diff = 0;
  double mred = 0;
  u64 mred_n = 0;
  for (u64 a = 0; a < 256; ++a)
    for (u64 b = 0; b < 256; ++b) {
      u64 exact = a * b, ap = approx_mul(bam, w, a, b);
      u64 ed = exact - ap;  // bam never overestimates
      ed_sum += ed;
      max_ed = std::max(max_ed, ed);
      diff += ed != 0;
      if (exact) {
        mred += double(ed) / double(exact);
        ++mred_n;
      }
    }
  CHECK(r.med == double(ed_sum) / 65536.0);
  CHECK(r.max_ed == max_ed);
  CHECK(r.error_rate == double(diff) / 65536.0);
  CHECK(r.mred == mred / double(mred_n));
  CHECK(r.n_mred_pairs == mred_n);
  CHECK(r.nmed == (double(ed_sum) / 65536.0) / (255.0 * 255.0));
}

TEST_CASE("sampled reports") {
  auto exact = sampled_report(make_mult("exact", 8), 8, 5000, 99);
  CHECK(exact.error_rate == 0);
  CHECK(exact.mode == "sampled");
  CHECK(exact.seed == 99);

  auto drum_full = sampled_report(make_mult("drum", 8, {{"k", 8}}), 8, 5000, 1);
  CHECK(drum_full.error_rate == 0);

  // deterministic per seed
  auto a1 = sampled_report(make_mult("bam", 8), 8, 1000, 5);
  auto a2 = sampled_report(make_mult("bam", 8), 8, 1000, 5);
  CHECK(a1 == a2);
  auto a3 = sampled_report(make_mult("bam", 8), 8, 1000, 6);
  CHECK(a1 != a3);
}

TEST_CASE("large sample tracks the exhaustive statistics") {
  auto bam = make_mult("bam", 8, {{"vbl", 4}});
  auto ex = exhaustive_report(bam, 8);
  auto sm = sampled_report(bam, 8, 100000, 1);
  CHECK(std::abs(sm.med - ex.med) / ex.med < 0.05);
}

TEST_CASE("full-sweep sampling coincides with the exhaustive report") {
  auto u = make_mult("drum", 6, {{"k", 3}});
  auto ex = exhaustive_report(u, 6);
  auto sw = sampled_report(u, 6, u64{1} << 12, 123);
  CHECK(sw.med == ex.med);
  CHECK(sw.nmed == ex.nmed);
  CHECK(sw.mred == ex.mred);
  CHECK(sw.max_ed == ex.max_ed);
  CHECK(sw.error_rate == ex.error_rate);
  CHECK(sw.n_evaluated == ex.n_evaluated);
}

TEST_CASE("operand-swap symmetry holds except for asm") {
  const int w = 6;
  for (const char* kind : {"bam", "drum", "roba", "dralm"}) {
    auto u = make_mult(kind, w);
    for (u64 a = 0; a < 64; ++a)
      for (u64 b = 0; b < 64; ++b)
        if (approx_mul(u, w, a, b) != approx_mul(u, w, b, a))
          FAIL(kind << " asymmetric at a=" << a << " b=" << b);
  }
  // asm conditions only the multiplier operand, so swapping changes results
  auto am = make_mult("asm", 8);
  bool differs = false;
  for (u64 a = 0; a < 64 && !differs; ++a)
    for (u64 b = 0; b < 64 && !differs; ++b)
      differs = approx_mul(am, 8, a, b) != approx_mul(am, 8, b, a);
  CHECK(differs);
}

TEST_CASE("adder reports use the adder normalization") {
  auto r = exhaustive_report(make_adder("trunc", 8, {{"m", 8}}), 8);
  CHECK(r.nmed == doctest::Approx(r.med / 510.0));
}

TEST_CASE("metric preconditions") {
  CHECK_THROWS_AS(exhaustive_report(make_mult("exact", 12), 12), MetricsError);
  CHECK_THROWS_AS(sampled_report(make_mult("exact", 8), 8, 0, 1), MetricsError);
}

TEST_CASE("report json carries the documented field names") {
  auto j = report_to_json(exhaustive_report(make_mult("exact", 4), 4));
  for (const char* f : {"med", "nmed", "mred", "max_ed", "error_rate",
                        "n_evaluated", "mode", "seed", "n_mred_pairs"})
    CHECK(j.contains(f));
}

TEST_CASE("matmul error against the scalar model") {
  std::mt19937_64 rng(3);
  TpuConfig cfg;
  cfg.s = 8;
  cfg.fifo_depth = 16;
  cfg.mult = make_mult("exact", 8);
  cfg.adder = make_adder("exact", 28);
  Mat a(8, 8), b(8, 8);
  for (auto& v : a.data) v = draw_bits(rng, 8);
  for (auto& v : b.data) v = draw_bits(rng, 8);

  auto zero = matmul_error(cfg, a, b);
  CHECK(zero.med == 0);
  CHECK(zero.rel_frobenius == 0);
  CHECK_FALSE(zero.overflow);

  // all products vanish: relative Frobenius error is exactly 1
  TpuConfig tcfg = cfg;
  tcfg.mult = make_mult("trunc", 8, {{"mult_dw", 8}});
  Mat pos_a(8, 8), pos_b(8, 8);
  for (auto& v : pos_a.data) v = 1 + draw_bits(rng, 4);
  for (auto& v : pos_b.data) v = 1 + draw_bits(rng, 4);
  auto full = matmul_error(tcfg, pos_a, pos_b);
  CHECK(full.rel_frobenius == doctest::Approx(1.0));

  // approximate config: med equals a direct per-cell recomputation
  TpuConfig dcfg = cfg;
  dcfg.mult = make_mult("drum", 8, {{"k", 6}});
  auto rep = matmul_error(dcfg, a, b);
  auto sim = simulate(dcfg, a, b);
  auto exact = reference_matmul(a, b);
  u64 total = 0;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      u64 ap = sim.c.at(i, j), ex = exact.at(i, j);
      total += ap > ex ? ap - ex : ex - ap;
    }
  CHECK(rep.med == double(total) / 64.0);
  CHECK(mat_report_to_json(rep).contains("rel_frobenius"));
}
