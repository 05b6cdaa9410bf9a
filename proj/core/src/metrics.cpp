#include "tpugen/metrics.hpp"

#include <cmath>

#include "tpugen/simulator.hpp"

namespace tpugen {

namespace {

// Shared accumulation core. Integer sums throughout; the single division per
// statistic happens at the end. mred is the one float-accumulated value and
// runs in a fixed evaluation order.
struct Accum {
  u128 ed_sum = 0;
  u128 max_ed = 0;
  u64 diff = 0;
  u64 n = 0;
  double mred_sum = 0;
  u64 mred_n = 0;

  void add(u128 approx, u128 exact) {
    u128 ed = approx > exact ? approx - exact : exact - approx;
    ed_sum += ed;
    if (ed > max_ed) max_ed = ed;
    if (ed != 0) ++diff;
    ++n;
    if (exact != 0) {
      mred_sum += static_cast<double>(ed) / static_cast<double>(exact);
      ++mred_n;
    }
  }

  ErrorReport finish(double norm) const {
    ErrorReport r;
    r.n_evaluated = n;
    r.n_mred_pairs = mred_n;
    if (n) {
      r.med = static_cast<double>(ed_sum) / static_cast<double>(n);
      r.error_rate = static_cast<double>(diff) / static_cast<double>(n);
    }
    r.nmed = r.med / norm;
    if (mred_n) r.mred = mred_sum / static_cast<double>(mred_n);
    r.max_ed = static_cast<u64>(max_ed);
    return r;
  }
};

double mult_norm(int w) {
  double top = static_cast<double>(mask_bits(w));
  return top * top;
}

double adder_norm(int w) { return 2.0 * static_cast<double>(mask_bits(w)); }

template <class Eval>
ErrorReport run_exhaustive(int w, double norm, Eval&& eval) {
  if (w > 10)
    throw MetricsError("exhaustive sweep limited to W <= 10 (2^(2W) pairs); "
                       "use sampled_report");
  Accum acc;
  u64 top = mask_bits(w);
  for (u64 a = 0; a <= top; ++a)
    for (u64 b = 0; b <= top; ++b) eval(acc, a, b);
  ErrorReport r = acc.finish(norm);
  r.mode = "exhaustive";
  return r;
}

template <class Eval>
ErrorReport run_sampled(int w, double norm, u64 n_samples, u64 seed,
                        Eval&& eval) {
  if (n_samples < 1) throw MetricsError("n_samples must be at least 1");
  Accum acc;
  if (2 * w < 64 && n_samples == (u64{1} << (2 * w))) {
    // full sweep: every pair exactly once, same totals as exhaustive
    u64 top = mask_bits(w);
    for (u64 a = 0; a <= top; ++a)
      for (u64 b = 0; b <= top; ++b) eval(acc, a, b);
  } else {
    std::mt19937_64 rng(seed);
    for (u64 i = 0; i < n_samples; ++i) {
      u64 a = draw_bits(rng, w);
      u64 b = draw_bits(rng, w);
      eval(acc, a, b);
    }
  }
  ErrorReport r = acc.finish(norm);
  r.mode = "sampled";
  r.seed = seed;
  return r;
}

}  // namespace

ErrorReport exhaustive_report(const MultUnit& u, int w) {
  validate_mult(u, w);
  return run_exhaustive(w, mult_norm(w), [&](Accum& acc, u64 a, u64 b) {
    acc.add(approx_mul(u, w, a, b), static_cast<u128>(a) * b);
  });
}

ErrorReport exhaustive_report(const AdderUnit& u, int w) {
  validate_adder(u, w);
  return run_exhaustive(w, adder_norm(w), [&](Accum& acc, u64 a, u64 b) {
    acc.add(approx_add(u, w, a, b), static_cast<u128>(a) + b);
  });
}

ErrorReport sampled_report(const MultUnit& u, int w, u64 n_samples, u64 seed) {
  validate_mult(u, w);
  return run_sampled(w, mult_norm(w), n_samples, seed,
                     [&](Accum& acc, u64 a, u64 b) {
                       acc.add(approx_mul(u, w, a, b),
                               static_cast<u128>(a) * b);
                     });
}

ErrorReport sampled_report(const AdderUnit& u, int w, u64 n_samples, u64 seed) {
  validate_adder(u, w);
  return run_sampled(w, adder_norm(w), n_samples, seed,
                     [&](Accum& acc, u64 a, u64 b) {
                       acc.add(approx_add(u, w, a, b),
                               static_cast<u128>(a) + b);
                     });
}

nlohmann::json report_to_json(const ErrorReport& r) {
  nlohmann::json j;
  j["med"] = r.med;
  j["nmed"] = r.nmed;
  j["mred"] = r.mred;
  j["max_ed"] = r.max_ed;
  j["error_rate"] = r.error_rate;
  j["n_evaluated"] = r.n_evaluated;
  j["mode"] = r.mode;
  j["seed"] = r.seed;
  j["n_mred_pairs"] = r.n_mred_pairs;
  return j;
}

MatErrorReport matmul_error(const TpuConfig& cfg, const Mat& a, const Mat& b) {
  SimResult sim = simulate(cfg, a, b);
  Mat exact = reference_matmul(a, b);

  MatErrorReport r;
  r.n_cells = static_cast<u64>(cfg.s) * cfg.s;
  r.overflow = sim.any_overflow();
  u128 ed_sum = 0;
  double fro_num = 0, fro_den = 0;
  for (int i = 0; i < cfg.s; ++i)
    for (int j = 0; j < cfg.s; ++j) {
      u64 ap = sim.c.at(i, j), ex = exact.at(i, j) & mask_bits(cfg.acc_width);
      u64 ed = ap > ex ? ap - ex : ex - ap;
      ed_sum += ed;
      if (ed > r.max_ed) r.max_ed = ed;
      double d = static_cast<double>(ed), e = static_cast<double>(ex);
      fro_num += d * d;
      fro_den += e * e;
    }
  r.med = static_cast<double>(ed_sum) / static_cast<double>(r.n_cells);
  r.rel_frobenius = fro_den > 0 ? std::sqrt(fro_num / fro_den)
                                : (fro_num > 0 ? 1.0 : 0.0);
  return r;
}

nlohmann::json mat_report_to_json(const MatErrorReport& r) {
  nlohmann::json j;
  j["med"] = r.med;
  j["rel_frobenius"] = r.rel_frobenius;
  j["max_ed"] = r.max_ed;
  j["n_cells"] = r.n_cells;
  j["overflow"] = r.overflow;
  return j;
}

}  // namespace tpugen
