#pragma once

// Verilog generation for the output-stationary systolic template. Every
// block comes out deterministic, parses under the project's Verilog-subset
// parser, and the combinational arithmetic modules evaluate (via the
// netlist walker) to exactly the behavioral rules.
//
// Template shape: S x S array of accumulate cells (APE), fed along rows by
// activation FIFOs and along columns by weight FIFOs (the FIFOs absorb the
// diagonal skew), with wide-word behavioral memories and a cycle-counting
// controller. Multipliers with separable operand conditioning get per-row
// and per-column conditioning units (PAU) at the array edge; the cells then
// carry only the core multiply. Identity-conditioning multipliers are
// instantiated whole inside the cell and no PAU appears in the closure.

#include <stdexcept>
#include <string>
#include <vector>

#include "tpugen/config.hpp"
#include "tpugen/verilog.hpp"

namespace tpugen {

struct EmitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ModuleKind {
  Adder,
  Multiplier,
  Pau,
  Ape,
  Fifo,
  Controller,
  WeightMem,
  IfmapMem,
};

// Deterministic module names, e.g. add_loa_w8_m4, mul_drum_w8_k4,
// pau_drum_w8_k4. The name doubles as the retrieval join key.
std::string adder_module_name(const AdderUnit& u, int w);
std::string mult_module_name(const MultUnit& u, int w);
std::string pau_module_name(const MultUnit& u, int w);
std::string ape_module_name(const TpuConfig& cfg);
std::string top_module_name(const TpuConfig& cfg);

// Top module name; also the output directory name for a written project.
std::string project_id(const TpuConfig& cfg);

// Standalone arithmetic blocks at an explicit operand width (the standard
// library spans widths the config floor does not reach, and the exhaustive
// walker checks run at W <= 6).
VerilogModule emit_adder_module(const AdderUnit& u, int w);
VerilogModule emit_mult_module(const MultUnit& u, int w);
VerilogModule emit_pau_module(const MultUnit& u, int w);

// One block of the template for this config. Fifo returns the
// activation-side FIFO; the weight-side FIFO (emitted by emit_project when
// its width differs) is the same shape at the weight width.
VerilogModule emit_module(ModuleKind kind, const TpuConfig& cfg);

// Top-level array: S^2 cells, 2S FIFOs, 2S PAUs when conditioning is
// non-identity (else none), controller, both memories. Line 2 of the source
// is the machine-readable config header `// TPUGEN {json}`.
VerilogModule emit_top(const TpuConfig& cfg);

// Top plus its full dependency closure, leaves first, top last, with a
// manifest of per-module content digests.
VerilogProject emit_project(const TpuConfig& cfg);

// Self-checking testbench: loads A (S x K) and B (K x S) into the
// memories, runs the array, and compares every drained cell against the
// behavioral simulator's values, which are baked in as literals.
VerilogModule emit_testbench(const TpuConfig& cfg, const Mat& a, const Mat& b,
                             u64 seed);

// Retrieval corpus: every adder/multiplier kind at default params for each
// width in {8, 16, 32}, plus conditioning units for the non-identity
// multiplier kinds, each with a description written for lexical retrieval.
struct LibraryEntry {
  VerilogModule module;
  std::string description;
};
std::vector<LibraryEntry> standard_library();

// Description text used for the standard library and the store index.
std::string adder_description(const AdderUnit& u, int w);
std::string mult_description(const MultUnit& u, int w);
std::string pau_description(const MultUnit& u, int w);

}  // namespace tpugen
