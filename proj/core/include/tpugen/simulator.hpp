#pragma once

// Behavioral output-stationary systolic simulator: the functional oracle the
// validator and testbench emitter compare against. Cells hold one output
// element each; operands stream in with the diagonal skew and meet at cell
// (i,j) on cycle i+j+k.

#include <stdexcept>
#include <vector>

#include "tpugen/config.hpp"

namespace tpugen {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimResult {
  Mat c;                    // S x S accumulator values
  u64 cycles = 0;           // skew-in + accumulate + drain
  std::vector<u8> overflow; // per-cell wrap flags, row-major

  bool any_overflow() const {
    for (u8 f : overflow)
      if (f) return true;
    return false;
  }
};

// A is S x K, B is K x S; entries must fit dw/ww. share_paus switches
// between edge conditioning (one PAU per streamed operand, the hardware
// arrangement) and per-cell conditioning; results are bit-identical.
SimResult simulate(const TpuConfig& cfg, const Mat& a, const Mat& b,
                   bool share_paus = true);

Mat reference_matmul(const Mat& a, const Mat& b);

// Arbitrary-shape harness: pads A (M x K) and B (K x N) into S-sized tiles,
// runs the array per tile, and combines K-tiles with the exact adder at
// accumulator width.
Mat tiled_matmul(const TpuConfig& cfg, const Mat& a, const Mat& b);

}  // namespace tpugen
