#pragma once

// Verilog-2005 subset shared by the emitter, the module store, and the
// validator: module header with ANSI ports and [msb:lsb] widths, parameter
// and wire/reg declarations, continuous assigns, opaque always/initial
// blocks (scanned for identifiers only), and instantiations. Everything
// else is a parse error carrying line and column.
//
// The expression walker evaluates flat combinational modules (assign-only)
// so small-width arithmetic RTL can be checked against the behavioral rules
// without an external simulator.

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tpugen/common.hpp"

namespace tpugen {

struct VerilogError : std::runtime_error {
  int line = 0, col = 0;
  VerilogError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " (line " + std::to_string(line_) + ", col " +
                           std::to_string(col_) + ")"),
        line(line_),
        col(col_) {}
};

struct VExpr;
using VExprPtr = std::shared_ptr<const VExpr>;

struct VExpr {
  enum class Kind { Literal, Ident, Unary, Binary, Ternary, Select, Concat, Repl };
  Kind kind = Kind::Literal;
  u128 value = 0;     // Literal
  int lit_width = 0;  // Literal: declared size, 0 if unsized
  std::string name;   // Ident and Select base
  std::string op;     // Unary/Binary operator text
  std::vector<VExprPtr> args;
  int msb = -1, lsb = -1;  // Select (bit select: msb == lsb)
  u64 repl_count = 0;      // Repl
  int line = 0, col = 0;
};

struct VPort {
  std::string name;
  bool is_input = true;
  int width = 1;

  bool operator==(const VPort&) const = default;
};

struct VNet {
  std::string name;
  int width = 1;
  bool is_reg = false;
  u64 depth = 0;  // memory rows; 0 means scalar net
};

struct VParamDecl {
  std::string name;
  i64 value = 0;
};

struct VAssign {
  std::string lhs;
  int msb = -1, lsb = -1;  // -1: whole net
  VExprPtr rhs;
  int line = 0;
};

struct VConn {
  std::string formal;  // empty for positional connections
  VExprPtr actual;
  int line = 0;
};

struct VInst {
  std::string type_name;
  std::string inst_name;
  std::vector<VConn> conns;
  int line = 0;
};

struct VAlways {
  std::string keyword;  // "always" or "initial"
  std::string text;     // raw text of the whole block
  std::vector<std::string> idents;
  int line = 0;
};

struct VerilogModuleAst {
  std::string name;
  std::vector<VPort> ports;
  std::vector<VParamDecl> params;
  std::vector<VNet> nets;  // ports appear here too
  std::vector<VAssign> assigns;
  std::vector<VAlways> blocks;
  std::vector<VInst> insts;

  const VNet* find_net(std::string_view n) const;
  const VPort* find_port(std::string_view n) const;
};

std::vector<VerilogModuleAst> parse_verilog(const std::string& source);
// Exactly one module in the source, or VerilogError.
VerilogModuleAst parse_single_module(const std::string& source);

// Bit width of an expression in a module's net environment (Verilog
// self-determined widths). Throws VerilogError on unknown identifiers.
int infer_width(const VerilogModuleAst& m, const VExprPtr& e);

// Gate primitives never count as module dependencies.
bool is_verilog_primitive(std::string_view name);

// -------------------------------------------------------------------------
// lightweight records used across the toolchain

struct VerilogModule {
  std::string name;
  std::string source;
  std::vector<VPort> ports;
  std::vector<std::string> deps;  // instantiated module types, sorted unique

  bool operator==(const VerilogModule&) const = default;
};

// Parse + extract the record fields from one-module source.
VerilogModule module_from_source(const std::string& source);

struct VerilogProject {
  VerilogModule top;
  std::vector<VerilogModule> modules;  // dependency order, leaves first, top last
  nlohmann::json manifest;             // config + per-module content digests
};

// Evaluate a flat combinational module (assigns only; no instances, no
// always blocks): named inputs -> values of all output ports. Values are
// masked to declared widths; undriven nets and combinational cycles throw.
std::map<std::string, u64> eval_combinational(const VerilogModuleAst& m,
                                              const std::map<std::string, u64>& inputs);

}  // namespace tpugen
