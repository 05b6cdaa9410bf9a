#include "tpugen/simulator.hpp"

#include <algorithm>

namespace tpugen {

namespace {

void check_operands(const TpuConfig& cfg, const Mat& a, const Mat& b) {
  if (a.rows != cfg.s || b.cols != cfg.s || a.cols != b.rows)
    throw SimError("shape mismatch: A is " + std::to_string(a.rows) + "x" +
                   std::to_string(a.cols) + ", B is " + std::to_string(b.rows) +
                   "x" + std::to_string(b.cols) + ", S=" + std::to_string(cfg.s));
  if (a.cols < 1) throw SimError("K must be at least 1");
  if (a.cols > cfg.k_max) throw SimError("K exceeds k_max");
  for (u64 v : a.data)
    if (v > mask_bits(cfg.dw)) throw SimError("A entry exceeds data width");
  for (u64 v : b.data)
    if (v > mask_bits(cfg.ww)) throw SimError("B entry exceeds weight width");
}

}  // namespace

SimResult simulate(const TpuConfig& cfg, const Mat& a, const Mat& b,
                   bool share_paus) {
  check_operands(cfg, a, b);
  const int s = cfg.s, k_depth = a.cols;
  const int w = mult_width(cfg.dw, cfg.ww);

  // Edge conditioning: one PAU per streamed operand word. The per-cell mode
  // conditions inside the loop instead; the outputs must never differ.
  std::vector<ConditionedOperand> ca, cb;
  if (share_paus) {
    ca.reserve(a.data.size());
    for (u64 v : a.data) ca.push_back(pau_condition(cfg.mult, w, v));
    cb.reserve(b.data.size());
    for (u64 v : b.data) cb.push_back(pau_condition(cfg.mult, w, v));
  }

  SimResult res;
  res.c = Mat(s, s);
  res.overflow.assign(static_cast<std::size_t>(s) * s, 0);

  // Cell (i,j) consumes a[i][k] and b[k][j] on cycle i+j+k; iterating cycles
  // and deriving k keeps the schedule explicit.
  const int active_cycles = 2 * (s - 1) + k_depth;
  for (int t = 0; t < active_cycles; ++t) {
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) {
        int k = t - i - j;
        if (k < 0 || k >= k_depth) continue;
        u64 prod;
        if (share_paus) {
          prod = ape_core_mul(cfg.mult, w, ca[static_cast<std::size_t>(i) * k_depth + k],
                              cb[static_cast<std::size_t>(k) * s + j]);
        } else {
          prod = ape_core_mul(cfg.mult, w, pau_condition(cfg.mult, w, a.at(i, k)),
                              pau_condition(cfg.mult, w, b.at(k, j)));
        }
        u128 sum = approx_add(cfg.adder, cfg.acc_width, res.c.at(i, j),
                              prod & mask_bits(cfg.acc_width));
        if ((sum >> cfg.acc_width) != 0)
          res.overflow[static_cast<std::size_t>(i) * s + j] = 1;
        res.c.at(i, j) = static_cast<u64>(sum) & mask_bits(cfg.acc_width);
      }
  }

  res.cycles = os_cycle_count(s, k_depth);
  return res;
}

Mat reference_matmul(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) throw SimError("shape mismatch in reference_matmul");
  Mat c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      u64 acc = 0;
      for (int k = 0; k < a.cols; ++k) acc += a.at(i, k) * b.at(k, j);
      c.at(i, j) = acc;
    }
  return c;
}

Mat tiled_matmul(const TpuConfig& cfg, const Mat& a, const Mat& b) {
  if (a.cols != b.rows) throw SimError("shape mismatch in tiled_matmul");
  const int s = cfg.s;
  const int m = a.rows, k_total = a.cols, n = b.cols;
  AdderUnit exact{"exact", {}};
  Mat out(m, n);

  for (int i0 = 0; i0 < m; i0 += s)
    for (int j0 = 0; j0 < n; j0 += s) {
      std::vector<u64> acc(static_cast<std::size_t>(s) * s, 0);
      for (int k0 = 0; k0 < k_total; k0 += s) {
        int kw = std::min(s, k_total - k0);
        Mat ta(s, kw), tb(kw, s);
        for (int i = 0; i < s; ++i)
          for (int k = 0; k < kw; ++k)
            ta.at(i, k) = (i0 + i < m) ? a.at(i0 + i, k0 + k) : 0;
        for (int k = 0; k < kw; ++k)
          for (int j = 0; j < s; ++j)
            tb.at(k, j) = (j0 + j < n) ? b.at(k0 + k, j0 + j) : 0;
        SimResult tile = simulate(cfg, ta, tb);
        for (int i = 0; i < s; ++i)
          for (int j = 0; j < s; ++j) {
            std::size_t idx = static_cast<std::size_t>(i) * s + j;
            u128 sum = approx_add(exact, cfg.acc_width, acc[idx],
                                  tile.c.at(i, j));
            acc[idx] = static_cast<u64>(sum) & mask_bits(cfg.acc_width);
          }
      }
      for (int i = 0; i < s && i0 + i < m; ++i)
        for (int j = 0; j < s && j0 + j < n; ++j)
          out.at(i0 + i, j0 + j) = acc[static_cast<std::size_t>(i) * s + j];
    }
  return out;
}

}  // namespace tpugen
