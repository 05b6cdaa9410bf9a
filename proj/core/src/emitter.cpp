#include "tpugen/emitter.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "tpugen/arith.hpp"
#include "tpugen/simulator.hpp"
#include "tpugen/store.hpp"

namespace tpugen {

namespace {

std::string n(i64 v) { return std::to_string(v); }
std::string nu(u64 v) { return std::to_string(v); }

std::string hexlit(int width, u64 v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(v));
  return n(width) + "'h" + buf;
}

void ln(std::string& o, const std::string& s) {
  o += s;
  o += '\n';
}

// declaration range with trailing space, e.g. "[7:0] "
std::string wd(int w) { return "[" + n(w - 1) + ":0] "; }

std::string sel(const std::string& net, int msb, int lsb) {
  return net + "[" + n(msb) + ":" + n(lsb) + "]";
}

std::string bit(const std::string& net, int i) {
  return net + "[" + n(i) + "]";
}

// priority chain for the most significant set bit; 0 when the value is 0
std::string lead1_chain(const std::string& x, int w) {
  std::string e = "0";
  for (int i = 1; i < w; ++i) e = "(" + bit(x, i) + " ? " + n(i) + " : " + e + ")";
  return e;
}

// priority chain for the least significant set bit; w-1 when only the top
// bit could remain (and harmlessly w-1 for 0)
std::string ctz_chain(const std::string& x, int w) {
  std::string e = n(w - 1);
  for (int i = w - 2; i >= 0; --i)
    e = "(" + bit(x, i) + " ? " + n(i) + " : " + e + ")";
  return e;
}

// W+1-bit sum expression for the named adder rule. High parts are widened
// with a leading zero before the add: arithmetic directly inside a concat
// is self-determined and would drop the carry.
std::string adder_sum_expr(const std::string& kind, int m, int w,
                           const std::string& a, const std::string& b) {
  if (kind == "exact" || m == 0) return "(" + a + " + " + b + ")";
  auto hi = [&](const std::string& v) {
    return "{1'b0, " + sel(v, w - 1, m) + "}";
  };
  std::string cin = "(" + bit(a, m - 1) + " & " + bit(b, m - 1) + ")";
  if (kind == "loa" || kind == "loa_nocarry") {
    bool carry = kind == "loa";
    std::string low = m == w ? "(" + a + " | " + b + ")"
                             : "(" + sel(a, m - 1, 0) + " | " + sel(b, m - 1, 0) + ")";
    std::string high;
    if (m == w)
      high = carry ? cin : "1'b0";
    else
      high = "(" + hi(a) + " + " + hi(b) + (carry ? " + " + cin : "") + ")";
    return "{" + high + ", " + low + "}";
  }
  if (kind == "trunc" || kind == "soa") {
    std::string fill = kind == "soa" ? "1'b1" : "1'b0";
    if (m == w)
      return kind == "soa" ? "{1'b0, {" + n(w) + "{1'b1}}}"
                           : "{" + n(w + 1) + "{1'b0}}";
    return "{(" + hi(a) + " + " + hi(b) + "), {" + n(m) + "{" + fill + "}}}";
  }
  throw EmitError("no structural form for adder kind '" + kind + "'");
}

// fixed-point base-2 log of the nonzero w-bit value v; declares <p>_k,
// <p>_sh, <p>_log and returns the log wire name
std::string emit_log_stage(std::string& o, const std::string& v,
                           const std::string& p, int w) {
  int cb = clog2(static_cast<u64>(w));
  int lw = (w - 1) + cb;
  ln(o, "  wire [5:0] " + p + "_k;");
  ln(o, "  assign " + p + "_k = " + lead1_chain(v, w) + ";");
  ln(o, "  wire " + wd(2 * w - 1) + p + "_sh;");
  ln(o, "  assign " + p + "_sh = " + v + " << (" + n(w - 1) + " - " + p + "_k);");
  ln(o, "  wire " + wd(lw) + p + "_log;");
  ln(o, "  assign " + p + "_log = {" + sel(p + "_k", cb - 1, 0) + ", " +
            sel(p + "_sh", w - 2, 0) + "};");
  return p + "_log";
}

// antilog of the (lw+1)-bit log sum; declares <p>_kp and <p>_mant and
// returns the 2w-bit result expression
std::string emit_antilog(std::string& o, const std::string& lsum,
                         const std::string& p, int w) {
  int cb = clog2(static_cast<u64>(w));
  int lw = (w - 1) + cb;
  ln(o, "  wire [" + n(cb) + ":0] " + p + "_kp;");
  ln(o, "  assign " + p + "_kp = " + sel(lsum, lw, w - 1) + ";");
  ln(o, "  wire " + wd(w) + p + "_mant;");
  ln(o, "  assign " + p + "_mant = {1'b1, " + sel(lsum, w - 2, 0) + "};");
  return "((" + p + "_kp >= " + n(w - 1) + ") ? (" + p + "_mant << (" + p +
         "_kp - " + n(w - 1) + ")) : (" + p + "_mant >> (" + n(w - 1) + " - " +
         p + "_kp)))";
}

// nearest-power-of-two rounding: <p>_r = 2^round_shift(v), ties up
void emit_round_stage(std::string& o, const std::string& v,
                      const std::string& p, int w) {
  ln(o, "  wire [5:0] " + p + "_k;");
  ln(o, "  assign " + p + "_k = " + lead1_chain(v, w) + ";");
  ln(o, "  wire " + wd(w) + p + "_rem;");
  ln(o, "  assign " + p + "_rem = " + v + " - (1 << " + p + "_k);");
  ln(o, "  wire " + p + "_up;");
  ln(o, "  assign " + p + "_up = {" + p + "_rem, 1'b0} >= (1 << " + p + "_k);");
  ln(o, "  wire [5:0] " + p + "_s;");
  ln(o, "  assign " + p + "_s = " + p + "_up ? (" + p + "_k + 1) : " + p + "_k;");
  ln(o, "  wire [" + n(w) + ":0] " + p + "_r;");
  ln(o, "  assign " + p + "_r = 1 << " + p + "_s;");
}

// leading-one segmenting: <p>_s shift, <p>_m k-bit mantissa with forced low bit
void emit_segment_stage(std::string& o, const std::string& v,
                        const std::string& p, int w, int k) {
  ln(o, "  wire [5:0] " + p + "_k;");
  ln(o, "  assign " + p + "_k = " + lead1_chain(v, w) + ";");
  ln(o, "  wire [5:0] " + p + "_s;");
  ln(o, "  assign " + p + "_s = (" + p + "_k < " + n(k) + ") ? 6'd0 : (" + p +
            "_k - " + n(k - 1) + ");");
  ln(o, "  wire " + wd(w) + p + "_m;");
  ln(o, "  assign " + p + "_m = (" + p + "_k < " + n(k) + ") ? " + v + " : ((" +
            v + " >> " + p + "_s) | 1);");
}

std::string zero2w(int w) { return n(2 * w) + "'d0"; }

void emit_mult_body(std::string& o, const MultUnit& u, int w) {
  const std::string& k = u.kind;
  if (k == "exact") {
    ln(o, "  assign y = a * b;");
    return;
  }
  if (k == "trunc") {
    u64 tm = mask_bits(w) & ~mask_bits(static_cast<int>(u.params[0]));
    ln(o, "  assign y = (a & " + hexlit(w, tm) + ") * (b & " + hexlit(w, tm) +
              ");");
    return;
  }
  if (k == "bam") {
    int vbl = static_cast<int>(u.params[0]);
    std::vector<std::string> terms;
    for (int i = 0; i < w; ++i) {
      int cut = vbl - i;  // b columns below this index fall under the break
      if (cut >= w) continue;
      std::string pp = cut <= 0
                           ? "(b << " + n(i) + ")"
                           : "((b & " + hexlit(w, mask_bits(w) & ~mask_bits(cut)) +
                                 ") << " + n(i) + ")";
      std::string t = "pp" + n(i);
      ln(o, "  wire " + wd(2 * w) + t + ";");
      ln(o, "  assign " + t + " = " + bit("a", i) + " ? " + pp + " : " +
                zero2w(w) + ";");
      terms.push_back(t);
    }
    if (terms.empty()) {
      ln(o, "  assign y = " + zero2w(w) + ";");
      return;
    }
    std::string sum = terms[0];
    for (std::size_t t = 1; t < terms.size(); ++t) sum += " + " + terms[t];
    ln(o, "  assign y = " + sum + ";");
    return;
  }
  if (k == "asm") {
    int nw = static_cast<int>(u.params[0]);
    u64 alphabets = u.params[1];
    u64 top = 2 * alphabets - 1;
    bool clamp = top < mask_bits(nw);
    std::vector<std::string> terms;
    for (int pos = 0, idx = 0; pos < w; pos += nw, ++idx) {
      std::string s = n(idx);
      ln(o, "  wire " + wd(nw) + "nib" + s + ";");
      ln(o, "  assign nib" + s + " = " + sel("b", pos + nw - 1, pos) + ";");
      ln(o, "  wire [5:0] z" + s + ";");
      ln(o, "  assign z" + s + " = " + ctz_chain("nib" + s, nw) + ";");
      ln(o, "  wire " + wd(nw) + "od" + s + ";");
      ln(o, "  assign od" + s + " = nib" + s + " >> z" + s + ";");
      std::string rep = clamp ? "((od" + s + " > " + nu(top) + ") ? " + nu(top) +
                                    " : od" + s + ")"
                              : "od" + s;
      ln(o, "  wire " + wd(nw) + "rp" + s + ";");
      ln(o, "  assign rp" + s + " = " + rep + " << z" + s + ";");
      std::string t = "t" + s;
      ln(o, "  wire " + wd(2 * w) + t + ";");
      ln(o, "  assign " + t + " = (a * rp" + s + ") << " + n(pos) + ";");
      terms.push_back(t);
    }
    std::string sum = terms[0];
    for (std::size_t t = 1; t < terms.size(); ++t) sum += " + " + terms[t];
    ln(o, "  assign y = " + sum + ";");
    return;
  }
  if (k == "alm_loa" || k == "alm_maa3" || k == "alm_soa") {
    std::string log_kind = k == "alm_soa" ? "soa" : "loa";
    int m = static_cast<int>(u.params[0]);
    int lw = (w - 1) + clog2(static_cast<u64>(w));
    emit_log_stage(o, "a", "la", w);
    emit_log_stage(o, "b", "lb", w);
    ln(o, "  wire [" + n(lw) + ":0] lsum;");
    ln(o, "  assign lsum = " + adder_sum_expr(log_kind, m, lw, "la_log", "lb_log") +
              ";");
    std::string anti = emit_antilog(o, "lsum", "al", w);
    ln(o, "  assign y = (a == 0 || b == 0) ? " + zero2w(w) + " : " + anti + ";");
    return;
  }
  if (k == "dralm") {
    int dwp = static_cast<int>(u.params[0]);
    u64 tm = mask_bits(w) & ~mask_bits(dwp);
    int lw = (w - 1) + clog2(static_cast<u64>(w));
    ln(o, "  wire " + wd(w) + "ta;");
    ln(o, "  assign ta = a & " + hexlit(w, tm) + ";");
    ln(o, "  wire " + wd(w) + "tb;");
    ln(o, "  assign tb = b & " + hexlit(w, tm) + ";");
    emit_log_stage(o, "ta", "la", w);
    emit_log_stage(o, "tb", "lb", w);
    ln(o, "  wire [" + n(lw) + ":0] lsum;");
    ln(o, "  assign lsum = la_log + lb_log;");
    std::string anti = emit_antilog(o, "lsum", "al", w);
    ln(o, "  assign y = (ta == 0 || tb == 0) ? " + zero2w(w) + " : " + anti + ";");
    return;
  }
  if (k == "roba") {
    emit_round_stage(o, "a", "ra", w);
    emit_round_stage(o, "b", "rb", w);
    ln(o, "  assign y = (a == 0 || b == 0) ? " + zero2w(w) +
              " : (ra_r * b + rb_r * a - ra_r * rb_r);");
    return;
  }
  if (k == "drum") {
    int kk = static_cast<int>(u.params[0]);
    emit_segment_stage(o, "a", "sa", w, kk);
    emit_segment_stage(o, "b", "sb", w, kk);
    ln(o, "  assign y = (a == 0 || b == 0) ? " + zero2w(w) +
              " : ((sa_m * sb_m) << (sa_s + sb_s));");
    return;
  }
  throw EmitError("no structural form for multiplier kind '" + k + "'");
}

struct Dims {
  int s, dw, ww, mw, acc, fd, kmax;
  int kw;   // k_len bits
  int aw;   // memory address bits
  int cw;   // controller cycle counter bits
  int sw;   // drain index bits
  int fw;   // conditioned-triple word bits
  bool ident;
};

Dims dims(const TpuConfig& cfg) {
  Dims d;
  d.s = cfg.s;
  d.dw = cfg.dw;
  d.ww = cfg.ww;
  d.mw = mult_width(cfg.dw, cfg.ww);
  d.acc = cfg.acc_width;
  d.fd = cfg.fifo_depth;
  d.kmax = cfg.k_max;
  d.kw = clog2(static_cast<u64>(cfg.k_max)) + 1;
  d.aw = std::max(1, clog2(static_cast<u64>(cfg.k_max)));
  d.cw = clog2(static_cast<u64>(cfg.k_max + 3 * cfg.s)) + 1;
  d.sw = std::max(1, clog2(static_cast<u64>(cfg.s)));
  d.fw = 2 * d.mw + 6;
  d.ident = has_identity_conditioning(cfg.mult);
  return d;
}

void check_config(const TpuConfig& cfg) {
  if (auto p = config_problem(cfg)) throw EmitError("invalid config: " + *p);
}

std::string fifo_name(int w, int depth) {
  return "fifo_w" + n(w) + "_d" + n(depth);
}

std::string controller_name(const TpuConfig& cfg) {
  return "controller_s" + n(cfg.s) + "_k" + n(cfg.k_max);
}

std::string ifmap_mem_name(const TpuConfig& cfg) {
  return "ifmap_mem_w" + n(cfg.dw) + "_s" + n(cfg.s) + "_k" + n(cfg.k_max);
}

std::string weight_mem_name(const TpuConfig& cfg) {
  return "weight_mem_w" + n(cfg.ww) + "_s" + n(cfg.s) + "_k" + n(cfg.k_max);
}

std::string adder_tag(const AdderUnit& u) {
  const AdderRule* r = find_adder_rule(u.kind);
  if (!r) throw EmitError("unknown adder kind '" + u.kind + "'");
  std::string t = to_lower(u.kind);
  for (std::size_t i = 0; i < r->params.size() && i < u.params.size(); ++i)
    t += "_" + r->params[i].name + nu(u.params[i]);
  return t;
}

std::string mult_tag(const MultUnit& u) {
  const MultRule* r = find_mult_rule(u.kind);
  if (!r) throw EmitError("unknown multiplier kind '" + u.kind + "'");
  std::string t = to_lower(u.kind);
  for (std::size_t i = 0; i < r->params.size() && i < u.params.size(); ++i)
    t += "_" + r->params[i].name + nu(u.params[i]);
  return t;
}

VerilogModule emit_fifo(int w, int depth) {
  if (w < 1 || depth < 1) throw EmitError("bad fifo shape");
  int pw = std::max(1, clog2(static_cast<u64>(depth)));
  int cw = clog2(static_cast<u64>(depth)) + 1;
  std::string o;
  ln(o, "// ring-buffer fifo; depth need not be a power of two");
  ln(o, "module " + fifo_name(w, depth) + " (");
  ln(o, "  input clk,");
  ln(o, "  input rst,");
  ln(o, "  input push,");
  ln(o, "  input pop,");
  ln(o, "  input " + wd(w) + "din,");
  ln(o, "  output reg " + wd(w) + "dout,");
  ln(o, "  output empty,");
  ln(o, "  output full");
  ln(o, ");");
  ln(o, "  reg " + wd(w) + "mem [0:" + n(depth - 1) + "];");
  ln(o, "  reg " + wd(pw) + "wptr;");
  ln(o, "  reg " + wd(pw) + "rptr;");
  ln(o, "  reg " + wd(cw) + "count;");
  ln(o, "  assign empty = (count == 0);");
  ln(o, "  assign full = (count == " + n(depth) + ");");
  ln(o, "  always @(posedge clk) begin");
  ln(o, "    if (rst) begin");
  ln(o, "      wptr <= 0;");
  ln(o, "      rptr <= 0;");
  ln(o, "      count <= 0;");
  ln(o, "      dout <= 0;");
  ln(o, "    end else begin");
  ln(o, "      if (push) begin");
  ln(o, "        mem[wptr] <= din;");
  ln(o, "        wptr <= (wptr == " + n(depth - 1) + ") ? 0 : wptr + 1;");
  ln(o, "      end");
  ln(o, "      if (pop) begin");
  ln(o, "        dout <= mem[rptr];");
  ln(o, "        rptr <= (rptr == " + n(depth - 1) + ") ? 0 : rptr + 1;");
  ln(o, "      end");
  ln(o, "      if (push && !pop) count <= count + 1;");
  ln(o, "      if (pop && !push) count <= count - 1;");
  ln(o, "    end");
  ln(o, "  end");
  ln(o, "endmodule");
  return module_from_source(o);
}

VerilogModule emit_mem(const std::string& name, int word, int depth) {
  int aw = std::max(1, clog2(static_cast<u64>(depth)));
  std::string o;
  ln(o, "// wide-word operand staging memory, registered read");
  ln(o, "module " + name + " (");
  ln(o, "  input clk,");
  ln(o, "  input we,");
  ln(o, "  input " + wd(aw) + "waddr,");
  ln(o, "  input " + wd(word) + "wdata,");
  ln(o, "  input ren,");
  ln(o, "  input " + wd(aw) + "raddr,");
  ln(o, "  output reg " + wd(word) + "rdata");
  ln(o, ");");
  ln(o, "  reg " + wd(word) + "mem [0:" + n(depth - 1) + "];");
  ln(o, "  always @(posedge clk) begin");
  ln(o, "    if (we) begin");
  ln(o, "      mem[waddr] <= wdata;");
  ln(o, "    end");
  ln(o, "    if (ren) begin");
  ln(o, "      rdata <= mem[raddr];");
  ln(o, "    end");
  ln(o, "  end");
  ln(o, "endmodule");
  return module_from_source(o);
}

VerilogModule emit_controller(const TpuConfig& cfg) {
  Dims d = dims(cfg);
  std::string o;
  ln(o, "// run scheduler. cycle c: word c read; c+1: pushed into the skew");
  ln(o, "// fifos; row/column i starts popping at c = i+2; columns drain one");
  ln(o, "// per cycle starting at c = k+2(S-1); done after k+3S-2 cycles.");
  ln(o, "module " + controller_name(cfg) + " (");
  ln(o, "  input clk,");
  ln(o, "  input rst,");
  ln(o, "  input start,");
  ln(o, "  input " + wd(d.kw) + "k_len,");
  ln(o, "  output reg busy,");
  ln(o, "  output reg done,");
  ln(o, "  output reg clear,");
  ln(o, "  output reg " + wd(d.cw) + "cycle,");
  ln(o, "  output mem_ren,");
  ln(o, "  output " + wd(d.aw) + "mem_raddr,");
  ln(o, "  output push,");
  ln(o, "  output " + wd(d.s) + "row_pop,");
  ln(o, "  output " + wd(d.s) + "col_pop,");
  ln(o, "  output drain_valid,");
  ln(o, "  output " + wd(d.sw) + "drain_idx");
  ln(o, ");");
  ln(o, "  assign mem_ren = busy && (cycle < k_len);");
  ln(o, "  assign mem_raddr = " + sel("cycle", d.aw - 1, 0) + ";");
  ln(o, "  assign push = busy && (cycle >= 1) && (cycle <= k_len);");
  for (int i = 0; i < d.s; ++i) {
    ln(o, "  assign " + bit("row_pop", i) + " = busy && (cycle >= " + n(i + 2) +
              ") && (cycle < k_len + " + n(i + 2) + ");");
    ln(o, "  assign " + bit("col_pop", i) + " = " + bit("row_pop", i) + ";");
  }
  ln(o, "  wire " + wd(d.cw) + "drain_off;");
  ln(o, "  assign drain_off = cycle - k_len - " + n(2 * d.s - 2) + ";");
  ln(o, "  assign drain_valid = busy && (cycle >= k_len + " + n(2 * d.s - 2) +
            ") && (cycle < k_len + " + n(3 * d.s - 2) + ");");
  ln(o, "  assign drain_idx = " + sel("drain_off", d.sw - 1, 0) + ";");
  ln(o, "  always @(posedge clk) begin");
  ln(o, "    if (rst) begin");
  ln(o, "      busy <= 1'b0;");
  ln(o, "      done <= 1'b0;");
  ln(o, "      clear <= 1'b0;");
  ln(o, "      cycle <= 0;");
  ln(o, "    end else if (!busy) begin");
  ln(o, "      clear <= 1'b0;");
  ln(o, "      if (start) begin");
  ln(o, "        busy <= 1'b1;");
  ln(o, "        done <= 1'b0;");
  ln(o, "        clear <= 1'b1;");
  ln(o, "        cycle <= 0;");
  ln(o, "      end");
  ln(o, "    end else begin");
  ln(o, "      clear <= 1'b0;");
  ln(o, "      cycle <= cycle + 1;");
  ln(o, "      if (cycle == k_len + " + n(3 * d.s - 3) + ") begin");
  ln(o, "        busy <= 1'b0;");
  ln(o, "        done <= 1'b1;");
  ln(o, "      end");
  ln(o, "    end");
  ln(o, "  end");
  ln(o, "endmodule");
  return module_from_source(o);
}

VerilogModule emit_ape(const TpuConfig& cfg) {
  Dims d = dims(cfg);
  int p2 = 2 * d.mw;
  std::string o;
  ln(o, "// accumulate cell: one output element; streamed operands pass");
  ln(o, "// through one register per hop, the accumulator wraps at its");
  ln(o, "// width and latches the wrap");
  ln(o, "module " + ape_module_name(cfg) + " (");
  ln(o, "  input clk,");
  ln(o, "  input rst,");
  ln(o, "  input clear,");
  ln(o, "  input a_valid_in,");
  ln(o, "  input b_valid_in,");
  if (d.ident) {
    ln(o, "  input " + wd(d.dw) + "a_in,");
    ln(o, "  input " + wd(d.ww) + "b_in,");
  } else {
    ln(o, "  input " + wd(d.mw) + "a_mant_in,");
    ln(o, "  input [5:0] a_shift_in,");
    ln(o, "  input " + wd(d.mw) + "a_aux_in,");
    ln(o, "  input " + wd(d.mw) + "b_mant_in,");
    ln(o, "  input [5:0] b_shift_in,");
    ln(o, "  input " + wd(d.mw) + "b_aux_in,");
  }
  ln(o, "  output reg a_valid_out,");
  ln(o, "  output reg b_valid_out,");
  if (d.ident) {
    ln(o, "  output reg " + wd(d.dw) + "a_out,");
    ln(o, "  output reg " + wd(d.ww) + "b_out,");
  } else {
    ln(o, "  output reg " + wd(d.mw) + "a_mant_out,");
    ln(o, "  output reg [5:0] a_shift_out,");
    ln(o, "  output reg " + wd(d.mw) + "a_aux_out,");
    ln(o, "  output reg " + wd(d.mw) + "b_mant_out,");
    ln(o, "  output reg [5:0] b_shift_out,");
    ln(o, "  output reg " + wd(d.mw) + "b_aux_out,");
  }
  ln(o, "  output " + wd(d.acc) + "acc_out,");
  ln(o, "  output reg ovf");
  ln(o, ");");
  ln(o, "  wire fire;");
  ln(o, "  assign fire = a_valid_in & b_valid_in;");
  ln(o, "  reg " + wd(d.acc) + "acc_q;");
  ln(o, "  assign acc_out = acc_q;");
  ln(o, "  wire " + wd(p2) + "prod;");
  if (d.ident) {
    std::string aa = d.dw == d.mw
                         ? "a_in"
                         : "{{" + n(d.mw - d.dw) + "{1'b0}}, a_in}";
    std::string bb = d.ww == d.mw
                         ? "b_in"
                         : "{{" + n(d.mw - d.ww) + "{1'b0}}, b_in}";
    ln(o, "  " + mult_module_name(cfg.mult, d.mw) + " u_mul (.a(" + aa +
              "), .b(" + bb + "), .y(prod));");
  } else if (cfg.mult.kind == "drum") {
    ln(o, "  assign prod = ((a_mant_in == 0 && a_aux_in == 0) || (b_mant_in == 0 "
          "&& b_aux_in == 0)) ? " +
              zero2w(d.mw) +
              " : ((a_mant_in * b_mant_in) << (a_shift_in + b_shift_in));");
  } else if (cfg.mult.kind == "dralm") {
    int lw = (d.mw - 1) + clog2(static_cast<u64>(d.mw));
    ln(o, "  wire " + wd(d.mw) + "ta;");
    ln(o, "  assign ta = a_mant_in << a_shift_in;");
    ln(o, "  wire " + wd(d.mw) + "tb;");
    ln(o, "  assign tb = b_mant_in << b_shift_in;");
    emit_log_stage(o, "ta", "la", d.mw);
    emit_log_stage(o, "tb", "lb", d.mw);
    ln(o, "  wire [" + n(lw) + ":0] lsum;");
    ln(o, "  assign lsum = la_log + lb_log;");
    std::string anti = emit_antilog(o, "lsum", "al", d.mw);
    ln(o, "  assign prod = (ta == 0 || tb == 0) ? " + zero2w(d.mw) + " : " +
              anti + ";");
  } else if (cfg.mult.kind == "roba") {
    ln(o, "  wire [" + n(d.mw) + ":0] ar;");
    ln(o, "  assign ar = a_mant_in << a_shift_in;");
    ln(o, "  wire [" + n(d.mw) + ":0] br;");
    ln(o, "  assign br = b_mant_in << b_shift_in;");
    ln(o, "  assign prod = (a_aux_in == 0 || b_aux_in == 0) ? " + zero2w(d.mw) +
              " : (ar * b_aux_in + br * a_aux_in - ar * br);");
  } else {
    throw EmitError("no core form for multiplier kind '" + cfg.mult.kind + "'");
  }
  ln(o, "  wire " + wd(d.acc) + "prod_c;");
  if (d.acc > p2)
    ln(o, "  assign prod_c = {{" + n(d.acc - p2) + "{1'b0}}, prod};");
  else if (d.acc == p2)
    ln(o, "  assign prod_c = prod;");
  else
    ln(o, "  assign prod_c = " + sel("prod", d.acc - 1, 0) + ";");
  ln(o, "  wire [" + n(d.acc) + ":0] sum;");
  ln(o, "  " + adder_module_name(cfg.adder, d.acc) +
            " u_add (.a(acc_q), .b(prod_c), .y(sum));");
  ln(o, "  always @(posedge clk) begin");
  ln(o, "    if (rst) begin");
  ln(o, "      acc_q <= 0;");
  ln(o, "      ovf <= 1'b0;");
  ln(o, "      a_valid_out <= 1'b0;");
  ln(o, "      b_valid_out <= 1'b0;");
  if (d.ident) {
    ln(o, "      a_out <= 0;");
    ln(o, "      b_out <= 0;");
  } else {
    ln(o, "      a_mant_out <= 0;");
    ln(o, "      a_shift_out <= 0;");
    ln(o, "      a_aux_out <= 0;");
    ln(o, "      b_mant_out <= 0;");
    ln(o, "      b_shift_out <= 0;");
    ln(o, "      b_aux_out <= 0;");
  }
  ln(o, "    end else begin");
  ln(o, "      a_valid_out <= a_valid_in;");
  ln(o, "      b_valid_out <= b_valid_in;");
  if (d.ident) {
    ln(o, "      a_out <= a_in;");
    ln(o, "      b_out <= b_in;");
  } else {
    ln(o, "      a_mant_out <= a_mant_in;");
    ln(o, "      a_shift_out <= a_shift_in;");
    ln(o, "      a_aux_out <= a_aux_in;");
    ln(o, "      b_mant_out <= b_mant_in;");
    ln(o, "      b_shift_out <= b_shift_in;");
    ln(o, "      b_aux_out <= b_aux_in;");
  }
  ln(o, "      if (clear) begin");
  ln(o, "        acc_q <= 0;");
  ln(o, "        ovf <= 1'b0;");
  ln(o, "      end");
  ln(o, "      if (fire && !clear) begin");
  ln(o, "        acc_q <= " + sel("sum", d.acc - 1, 0) + ";");
  ln(o, "        ovf <= ovf | " + bit("sum", d.acc) + ";");
  ln(o, "      end");
  ln(o, "    end");
  ln(o, "  end");
  ln(o, "endmodule");
  return module_from_source(o);
}

}  // namespace

std::string adder_module_name(const AdderUnit& u, int w) {
  const AdderRule* r = find_adder_rule(u.kind);
  if (!r) throw EmitError("unknown adder kind '" + u.kind + "'");
  std::string s = "add_" + to_lower(u.kind) + "_w" + n(w);
  for (std::size_t i = 0; i < r->params.size() && i < u.params.size(); ++i)
    s += "_" + r->params[i].name + nu(u.params[i]);
  return s;
}

std::string mult_module_name(const MultUnit& u, int w) {
  const MultRule* r = find_mult_rule(u.kind);
  if (!r) throw EmitError("unknown multiplier kind '" + u.kind + "'");
  std::string s = "mul_" + to_lower(u.kind) + "_w" + n(w);
  for (std::size_t i = 0; i < r->params.size() && i < u.params.size(); ++i)
    s += "_" + r->params[i].name + nu(u.params[i]);
  return s;
}

std::string pau_module_name(const MultUnit& u, int w) {
  const MultRule* r = find_mult_rule(u.kind);
  if (!r) throw EmitError("unknown multiplier kind '" + u.kind + "'");
  std::string s = "pau_" + to_lower(u.kind) + "_w" + n(w);
  for (std::size_t i = 0; i < r->params.size() && i < u.params.size(); ++i)
    s += "_" + r->params[i].name + nu(u.params[i]);
  return s;
}

std::string ape_module_name(const TpuConfig& cfg) {
  return "ape_d" + n(cfg.dw) + "_w" + n(cfg.ww) + "_acc" + n(cfg.acc_width) +
         "_mul_" + mult_tag(cfg.mult) + "_add_" + adder_tag(cfg.adder);
}

std::string top_module_name(const TpuConfig& cfg) {
  return "tpu_s" + n(cfg.s) + "_d" + n(cfg.dw) + "_w" + n(cfg.ww) + "_acc" +
         n(cfg.acc_width) + "_f" + n(cfg.fifo_depth) + "_k" + n(cfg.k_max) +
         "_mul_" + mult_tag(cfg.mult) + "_add_" + adder_tag(cfg.adder);
}

std::string project_id(const TpuConfig& cfg) { return top_module_name(cfg); }

VerilogModule emit_adder_module(const AdderUnit& u, int w) {
  validate_adder(u, w);
  std::string o;
  ln(o, "// " + adder_description(u, w));
  ln(o, "module " + adder_module_name(u, w) + " (");
  ln(o, "  input " + wd(w) + "a,");
  ln(o, "  input " + wd(w) + "b,");
  ln(o, "  output [" + n(w) + ":0] y");
  ln(o, ");");
  int m = u.params.empty() ? 0 : static_cast<int>(u.params[0]);
  ln(o, "  assign y = " + adder_sum_expr(u.kind, m, w, "a", "b") + ";");
  ln(o, "endmodule");
  return module_from_source(o);
}

VerilogModule emit_mult_module(const MultUnit& u, int w) {
  validate_mult(u, w);
  std::string o;
  ln(o, "// " + mult_description(u, w));
  ln(o, "module " + mult_module_name(u, w) + " (");
  ln(o, "  input " + wd(w) + "a,");
  ln(o, "  input " + wd(w) + "b,");
  ln(o, "  output " + wd(2 * w) + "y");
  ln(o, ");");
  emit_mult_body(o, u, w);
  ln(o, "endmodule");
  return module_from_source(o);
}

VerilogModule emit_pau_module(const MultUnit& u, int w) {
  validate_mult(u, w);
  std::string o;
  ln(o, "// " + pau_description(u, w));
  ln(o, "module " + pau_module_name(u, w) + " (");
  ln(o, "  input " + wd(w) + "x,");
  ln(o, "  output " + wd(w) + "mant,");
  ln(o, "  output [5:0] shift,");
  ln(o, "  output " + wd(w) + "aux");
  ln(o, ");");
  if (has_identity_conditioning(u)) {
    ln(o, "  assign mant = x;");
    ln(o, "  assign shift = 6'd0;");
    ln(o, "  assign aux = x;");
  } else if (u.kind == "drum") {
    emit_segment_stage(o, "x", "sx", w, static_cast<int>(u.params[0]));
    ln(o, "  assign mant = sx_m;");
    ln(o, "  assign shift = sx_s;");
    ln(o, "  assign aux = x;");
  } else if (u.kind == "dralm") {
    int dwp = static_cast<int>(u.params[0]);
    ln(o, "  assign mant = x >> " + n(dwp) + ";");
    ln(o, "  assign shift = 6'd" + n(dwp) + ";");
    ln(o, "  assign aux = x;");
  } else if (u.kind == "roba") {
    emit_round_stage(o, "x", "rx", w);
    ln(o, "  assign mant = (x == 0) ? 0 : 1;");
    ln(o, "  assign shift = (x == 0) ? 6'd0 : rx_s;");
    ln(o, "  assign aux = x;");
  } else {
    throw EmitError("no conditioning form for multiplier kind '" + u.kind + "'");
  }
  ln(o, "endmodule");
  return module_from_source(o);
}

VerilogModule emit_module(ModuleKind kind, const TpuConfig& cfg) {
  check_config(cfg);
  Dims d = dims(cfg);
  switch (kind) {
    case ModuleKind::Adder:
      return emit_adder_module(cfg.adder, d.acc);
    case ModuleKind::Multiplier:
      return emit_mult_module(cfg.mult, d.mw);
    case ModuleKind::Pau:
      return emit_pau_module(cfg.mult, d.mw);
    case ModuleKind::Ape:
      return emit_ape(cfg);
    case ModuleKind::Fifo:
      return emit_fifo(d.ident ? d.dw : d.fw, d.fd);
    case ModuleKind::Controller:
      return emit_controller(cfg);
    case ModuleKind::IfmapMem:
      return emit_mem(ifmap_mem_name(cfg), d.s * d.dw, d.kmax);
    case ModuleKind::WeightMem:
      return emit_mem(weight_mem_name(cfg), d.s * d.ww, d.kmax);
  }
  throw EmitError("unknown module kind");
}

VerilogModule emit_top(const TpuConfig& cfg) {
  check_config(cfg);
  Dims d = dims(cfg);
  std::string ape = ape_module_name(cfg);
  std::string o;
  ln(o, "// output-stationary systolic matrix unit");
  ln(o, "// TPUGEN " + config_to_json(cfg).dump());
  ln(o, "module " + top_module_name(cfg) + " (");
  ln(o, "  input clk,");
  ln(o, "  input rst,");
  ln(o, "  input start,");
  ln(o, "  input " + wd(d.kw) + "k_len,");
  ln(o, "  input ifmap_we,");
  ln(o, "  input " + wd(d.aw) + "ifmap_waddr,");
  ln(o, "  input " + wd(d.s * d.dw) + "ifmap_wdata,");
  ln(o, "  input weight_we,");
  ln(o, "  input " + wd(d.aw) + "weight_waddr,");
  ln(o, "  input " + wd(d.s * d.ww) + "weight_wdata,");
  ln(o, "  output busy,");
  ln(o, "  output done,");
  ln(o, "  output overflow,");
  ln(o, "  output drain_valid,");
  ln(o, "  output " + wd(d.sw) + "drain_idx,");
  ln(o, "  output " + wd(d.s * d.acc) + "col_out");
  ln(o, ");");
  ln(o, "  wire clear;");
  ln(o, "  wire mem_ren;");
  ln(o, "  wire " + wd(d.aw) + "mem_raddr;");
  ln(o, "  wire push;");
  ln(o, "  wire " + wd(d.s) + "row_pop;");
  ln(o, "  wire " + wd(d.s) + "col_pop;");
  ln(o, "  wire " + wd(d.cw) + "ctrl_cycle;");
  ln(o, "  wire " + wd(d.s * d.dw) + "ifmap_word;");
  ln(o, "  wire " + wd(d.s * d.ww) + "weight_word;");
  ln(o, "  reg " + wd(d.s) + "row_valid_q;");
  ln(o, "  reg " + wd(d.s) + "col_valid_q;");

  int feed_w = d.ident ? 0 : d.fw;  // conditioned triple width (0 = raw)
  for (int i = 0; i < d.s; ++i) {
    ln(o, "  wire " + wd(d.ident ? d.dw : feed_w) + "a_feed_" + n(i) + ";");
    ln(o, "  wire a_empty_" + n(i) + ";");
    ln(o, "  wire a_full_" + n(i) + ";");
  }
  for (int j = 0; j < d.s; ++j) {
    ln(o, "  wire " + wd(d.ident ? d.ww : feed_w) + "b_feed_" + n(j) + ";");
    ln(o, "  wire b_empty_" + n(j) + ";");
    ln(o, "  wire b_full_" + n(j) + ";");
  }
  if (!d.ident) {
    for (int i = 0; i < d.s; ++i) {
      ln(o, "  wire " + wd(d.mw) + "a_mant_" + n(i) + ";");
      ln(o, "  wire [5:0] a_shift_" + n(i) + ";");
      ln(o, "  wire " + wd(d.mw) + "a_aux_" + n(i) + ";");
    }
    for (int j = 0; j < d.s; ++j) {
      ln(o, "  wire " + wd(d.mw) + "b_mant_" + n(j) + ";");
      ln(o, "  wire [5:0] b_shift_" + n(j) + ";");
      ln(o, "  wire " + wd(d.mw) + "b_aux_" + n(j) + ";");
    }
  }
  for (int i = 0; i < d.s; ++i)
    for (int j = 0; j < d.s; ++j) {
      std::string ij = n(i) + "_" + n(j);
      ln(o, "  wire h_v_" + ij + ";");
      ln(o, "  wire v_v_" + ij + ";");
      if (d.ident) {
        ln(o, "  wire " + wd(d.dw) + "h_a_" + ij + ";");
        ln(o, "  wire " + wd(d.ww) + "v_b_" + ij + ";");
      } else {
        ln(o, "  wire " + wd(d.mw) + "h_m_" + ij + ";");
        ln(o, "  wire [5:0] h_s_" + ij + ";");
        ln(o, "  wire " + wd(d.mw) + "h_x_" + ij + ";");
        ln(o, "  wire " + wd(d.mw) + "v_m_" + ij + ";");
        ln(o, "  wire [5:0] v_s_" + ij + ";");
        ln(o, "  wire " + wd(d.mw) + "v_x_" + ij + ";");
      }
      ln(o, "  wire " + wd(d.acc) + "cell_acc_" + ij + ";");
      ln(o, "  wire cell_ovf_" + ij + ";");
    }

  ln(o, "  " + controller_name(cfg) + " u_ctrl (");
  ln(o, "    .clk(clk), .rst(rst), .start(start), .k_len(k_len),");
  ln(o, "    .busy(busy), .done(done), .clear(clear), .cycle(ctrl_cycle),");
  ln(o, "    .mem_ren(mem_ren), .mem_raddr(mem_raddr), .push(push),");
  ln(o, "    .row_pop(row_pop), .col_pop(col_pop),");
  ln(o, "    .drain_valid(drain_valid), .drain_idx(drain_idx)");
  ln(o, "  );");
  ln(o, "  " + ifmap_mem_name(cfg) + " u_ifmap (");
  ln(o, "    .clk(clk), .we(ifmap_we), .waddr(ifmap_waddr), .wdata(ifmap_wdata),");
  ln(o, "    .ren(mem_ren), .raddr(mem_raddr), .rdata(ifmap_word)");
  ln(o, "  );");
  ln(o, "  " + weight_mem_name(cfg) + " u_weight (");
  ln(o, "    .clk(clk), .we(weight_we), .waddr(weight_waddr), .wdata(weight_wdata),");
  ln(o, "    .ren(mem_ren), .raddr(mem_raddr), .rdata(weight_word)");
  ln(o, "  );");

  // operand feeds: condition at the edge first when the multiplier rule
  // separates, then skew through one fifo per row and per column
  for (int i = 0; i < d.s; ++i) {
    std::string slice = sel("ifmap_word", (i + 1) * d.dw - 1, i * d.dw);
    std::string din = slice;
    if (!d.ident) {
      std::string x = d.dw == d.mw
                          ? slice
                          : "{{" + n(d.mw - d.dw) + "{1'b0}}, " + slice + "}";
      ln(o, "  " + pau_module_name(cfg.mult, d.mw) + " u_pau_a_" + n(i) +
                " (.x(" + x + "), .mant(a_mant_" + n(i) + "), .shift(a_shift_" +
                n(i) + "), .aux(a_aux_" + n(i) + "));");
      din = "{a_mant_" + n(i) + ", a_shift_" + n(i) + ", a_aux_" + n(i) + "}";
    }
    ln(o, "  " + fifo_name(d.ident ? d.dw : d.fw, d.fd) + " u_fifo_a_" + n(i) +
              " (");
    ln(o, "    .clk(clk), .rst(rst), .push(push), .pop(" + bit("row_pop", i) +
              "),");
    ln(o, "    .din(" + din + "), .dout(a_feed_" + n(i) + "),");
    ln(o, "    .empty(a_empty_" + n(i) + "), .full(a_full_" + n(i) + ")");
    ln(o, "  );");
  }
  for (int j = 0; j < d.s; ++j) {
    std::string slice = sel("weight_word", (j + 1) * d.ww - 1, j * d.ww);
    std::string din = slice;
    if (!d.ident) {
      std::string x = d.ww == d.mw
                          ? slice
                          : "{{" + n(d.mw - d.ww) + "{1'b0}}, " + slice + "}";
      ln(o, "  " + pau_module_name(cfg.mult, d.mw) + " u_pau_b_" + n(j) +
                " (.x(" + x + "), .mant(b_mant_" + n(j) + "), .shift(b_shift_" +
                n(j) + "), .aux(b_aux_" + n(j) + "));");
      din = "{b_mant_" + n(j) + ", b_shift_" + n(j) + ", b_aux_" + n(j) + "}";
    }
    ln(o, "  " + fifo_name(d.ident ? d.ww : d.fw, d.fd) + " u_fifo_b_" + n(j) +
              " (");
    ln(o, "    .clk(clk), .rst(rst), .push(push), .pop(" + bit("col_pop", j) +
              "),");
    ln(o, "    .din(" + din + "), .dout(b_feed_" + n(j) + "),");
    ln(o, "    .empty(b_empty_" + n(j) + "), .full(b_full_" + n(j) + ")");
    ln(o, "  );");
  }
  ln(o, "  always @(posedge clk) begin");
  ln(o, "    if (rst) begin");
  ln(o, "      row_valid_q <= 0;");
  ln(o, "      col_valid_q <= 0;");
  ln(o, "    end else begin");
  ln(o, "      row_valid_q <= row_pop;");
  ln(o, "      col_valid_q <= col_pop;");
  ln(o, "    end");
  ln(o, "  end");

  for (int i = 0; i < d.s; ++i)
    for (int j = 0; j < d.s; ++j) {
      std::string ij = n(i) + "_" + n(j);
      std::string left = n(i) + "_" + n(j - 1);
      std::string up = n(i - 1) + "_" + n(j);
      std::string av = j == 0 ? bit("row_valid_q", i) : "h_v_" + left;
      std::string bv = i == 0 ? bit("col_valid_q", j) : "v_v_" + up;
      ln(o, "  " + ape + " u_ape_" + ij + " (");
      ln(o, "    .clk(clk), .rst(rst), .clear(clear),");
      ln(o, "    .a_valid_in(" + av + "), .b_valid_in(" + bv + "),");
      if (d.ident) {
        std::string aa = j == 0 ? "a_feed_" + n(i) : "h_a_" + left;
        std::string bb = i == 0 ? "b_feed_" + n(j) : "v_b_" + up;
        ln(o, "    .a_in(" + aa + "), .b_in(" + bb + "),");
        ln(o, "    .a_valid_out(h_v_" + ij + "), .b_valid_out(v_v_" + ij + "),");
        ln(o, "    .a_out(h_a_" + ij + "), .b_out(v_b_" + ij + "),");
      } else {
        std::string f = "a_feed_" + n(i);
        std::string am = j == 0 ? sel(f, d.fw - 1, d.mw + 6) : "h_m_" + left;
        std::string as = j == 0 ? sel(f, d.mw + 5, d.mw) : "h_s_" + left;
        std::string ax = j == 0 ? sel(f, d.mw - 1, 0) : "h_x_" + left;
        std::string g = "b_feed_" + n(j);
        std::string bm = i == 0 ? sel(g, d.fw - 1, d.mw + 6) : "v_m_" + up;
        std::string bs = i == 0 ? sel(g, d.mw + 5, d.mw) : "v_s_" + up;
        std::string bx = i == 0 ? sel(g, d.mw - 1, 0) : "v_x_" + up;
        ln(o, "    .a_mant_in(" + am + "), .a_shift_in(" + as + "), .a_aux_in(" +
                  ax + "),");
        ln(o, "    .b_mant_in(" + bm + "), .b_shift_in(" + bs + "), .b_aux_in(" +
                  bx + "),");
        ln(o, "    .a_valid_out(h_v_" + ij + "), .b_valid_out(v_v_" + ij + "),");
        ln(o, "    .a_mant_out(h_m_" + ij + "), .a_shift_out(h_s_" + ij +
                  "), .a_aux_out(h_x_" + ij + "),");
        ln(o, "    .b_mant_out(v_m_" + ij + "), .b_shift_out(v_s_" + ij +
                  "), .b_aux_out(v_x_" + ij + "),");
      }
      ln(o, "    .acc_out(cell_acc_" + ij + "), .ovf(cell_ovf_" + ij + ")");
      ln(o, "  );");
    }

  // column-serial drain: row 0 sits in the low accumulator lane
  std::string mux;
  for (int j = d.s - 1; j >= 0; --j) {
    std::string cat = "{";
    for (int i = d.s - 1; i >= 0; --i) {
      cat += "cell_acc_" + n(i) + "_" + n(j);
      if (i > 0) cat += ", ";
    }
    cat += "}";
    if (j == d.s - 1)
      mux = cat;
    else
      mux = "((drain_idx == " + n(j) + ") ? " + cat + " : " + mux + ")";
  }
  ln(o, "  assign col_out = " + mux + ";");
  for (int i = 0; i < d.s; ++i) {
    std::string ors;
    for (int j = 0; j < d.s; ++j) {
      ors += "cell_ovf_" + n(i) + "_" + n(j);
      if (j + 1 < d.s) ors += " | ";
    }
    ln(o, "  wire row_ovf_" + n(i) + ";");
    ln(o, "  assign row_ovf_" + n(i) + " = " + ors + ";");
  }
  std::string ors;
  for (int i = 0; i < d.s; ++i) {
    ors += "row_ovf_" + n(i);
    if (i + 1 < d.s) ors += " | ";
  }
  ln(o, "  assign overflow = " + ors + ";");
  ln(o, "endmodule");
  return module_from_source(o);
}

VerilogProject emit_project(const TpuConfig& cfg) {
  check_config(cfg);
  Dims d = dims(cfg);
  std::map<std::string, VerilogModule> mods;
  auto put = [&](VerilogModule m) { mods.emplace(m.name, std::move(m)); };
  put(emit_adder_module(cfg.adder, d.acc));
  if (d.ident)
    put(emit_mult_module(cfg.mult, d.mw));
  else
    put(emit_pau_module(cfg.mult, d.mw));
  put(emit_ape(cfg));
  int fwa = d.ident ? d.dw : d.fw;
  int fwb = d.ident ? d.ww : d.fw;
  put(emit_fifo(fwa, d.fd));
  if (fwb != fwa) put(emit_fifo(fwb, d.fd));
  put(emit_controller(cfg));
  put(emit_mem(ifmap_mem_name(cfg), d.s * d.dw, d.kmax));
  put(emit_mem(weight_mem_name(cfg), d.s * d.ww, d.kmax));

  VerilogProject proj;
  proj.top = emit_top(cfg);
  proj.modules = ordered_closure(
      [&](const std::string& name) -> const VerilogModule* {
        auto it = mods.find(name);
        return it == mods.end() ? nullptr : &it->second;
      },
      proj.top);
  proj.manifest = project_manifest(proj.top, proj.modules);
  return proj;
}

VerilogModule emit_testbench(const TpuConfig& cfg, const Mat& a, const Mat& b,
                             u64 seed) {
  check_config(cfg);
  SimResult sim = simulate(cfg, a, b);
  Dims d = dims(cfg);
  int kk = a.cols;
  std::string top = top_module_name(cfg);
  std::string o;
  ln(o, "// self-checking bench; expected values baked in from the behavioral");
  ln(o, "// model, stimulus seed " + nu(seed));
  ln(o, "module tb_" + top + " ();");
  ln(o, "  reg clk;");
  ln(o, "  reg rst;");
  ln(o, "  reg start;");
  ln(o, "  reg " + wd(d.kw) + "k_len;");
  ln(o, "  reg ifmap_we;");
  ln(o, "  reg " + wd(d.aw) + "ifmap_waddr;");
  ln(o, "  reg " + wd(d.s * d.dw) + "ifmap_wdata;");
  ln(o, "  reg weight_we;");
  ln(o, "  reg " + wd(d.aw) + "weight_waddr;");
  ln(o, "  reg " + wd(d.s * d.ww) + "weight_wdata;");
  ln(o, "  wire busy;");
  ln(o, "  wire done;");
  ln(o, "  wire overflow;");
  ln(o, "  wire drain_valid;");
  ln(o, "  wire " + wd(d.sw) + "drain_idx;");
  ln(o, "  wire " + wd(d.s * d.acc) + "col_out;");
  for (int j = 0; j < d.s; ++j)
    ln(o, "  reg " + wd(d.s * d.acc) + "got_col_" + n(j) + ";");
  ln(o, "  integer errors;");
  ln(o, "  " + top + " u_dut (");
  ln(o, "    .clk(clk), .rst(rst), .start(start), .k_len(k_len),");
  ln(o, "    .ifmap_we(ifmap_we), .ifmap_waddr(ifmap_waddr), .ifmap_wdata(ifmap_wdata),");
  ln(o, "    .weight_we(weight_we), .weight_waddr(weight_waddr), .weight_wdata(weight_wdata),");
  ln(o, "    .busy(busy), .done(done), .overflow(overflow),");
  ln(o, "    .drain_valid(drain_valid), .drain_idx(drain_idx), .col_out(col_out)");
  ln(o, "  );");
  ln(o, "  initial begin");
  ln(o, "    clk = 1'b0;");
  ln(o, "    forever begin");
  ln(o, "      #5 clk = ~clk;");
  ln(o, "    end");
  ln(o, "  end");
  ln(o, "  always @(posedge clk) begin");
  ln(o, "    if (drain_valid) begin");
  for (int j = 0; j < d.s; ++j) {
    ln(o, "      if (drain_idx == " + n(j) + ") begin");
    ln(o, "        got_col_" + n(j) + " <= col_out;");
    ln(o, "      end");
  }
  ln(o, "    end");
  ln(o, "  end");
  ln(o, "  initial begin");
  ln(o, "    errors = 0;");
  ln(o, "    rst = 1'b1;");
  ln(o, "    start = 1'b0;");
  ln(o, "    ifmap_we = 1'b0;");
  ln(o, "    weight_we = 1'b0;");
  ln(o, "    ifmap_waddr = 0;");
  ln(o, "    ifmap_wdata = 0;");
  ln(o, "    weight_waddr = 0;");
  ln(o, "    weight_wdata = 0;");
  ln(o, "    k_len = " + n(kk) + ";");
  ln(o, "    repeat (4) @(posedge clk);");
  ln(o, "    rst = 1'b0;");
  ln(o, "    @(posedge clk);");
  ln(o, "    ifmap_we = 1'b1;");
  ln(o, "    weight_we = 1'b1;");
  for (int k = 0; k < kk; ++k) {
    ln(o, "    ifmap_waddr = " + n(k) + ";");
    for (int i = 0; i < d.s; ++i)
      ln(o, "    " + sel("ifmap_wdata", (i + 1) * d.dw - 1, i * d.dw) + " = " +
                hexlit(d.dw, a.at(i, k)) + ";");
    ln(o, "    weight_waddr = " + n(k) + ";");
    for (int j = 0; j < d.s; ++j)
      ln(o, "    " + sel("weight_wdata", (j + 1) * d.ww - 1, j * d.ww) + " = " +
                hexlit(d.ww, b.at(k, j)) + ";");
    ln(o, "    @(posedge clk);");
  }
  ln(o, "    ifmap_we = 1'b0;");
  ln(o, "    weight_we = 1'b0;");
  ln(o, "    @(posedge clk);");
  ln(o, "    start = 1'b1;");
  ln(o, "    @(posedge clk);");
  ln(o, "    start = 1'b0;");
  ln(o, "    repeat (" + nu(sim.cycles + 8) + ") @(posedge clk);");
  ln(o, "    if (done !== 1'b1) begin");
  ln(o, "      $display(\"done not asserted\");");
  ln(o, "      errors = errors + 1;");
  ln(o, "    end");
  for (int j = 0; j < d.s; ++j)
    for (int i = 0; i < d.s; ++i) {
      std::string got =
          sel("got_col_" + n(j), (i + 1) * d.acc - 1, i * d.acc);
      std::string want = hexlit(d.acc, sim.c.at(i, j));
      ln(o, "    if (" + got + " !== " + want + ") begin");
      ln(o, "      $display(\"cell %0d %0d got %h want %h\", " + n(i) + ", " +
                n(j) + ", " + got + ", " + want + ");");
      ln(o, "      errors = errors + 1;");
      ln(o, "    end");
    }
  ln(o, "    if (overflow !== 1'b" + std::string(sim.any_overflow() ? "1" : "0") +
            ") begin");
  ln(o, "      $display(\"overflow flag wrong\");");
  ln(o, "      errors = errors + 1;");
  ln(o, "    end");
  ln(o, "    if (errors == 0) begin");
  ln(o, "      $display(\"TB PASS\");");
  ln(o, "    end else begin");
  ln(o, "      $display(\"TB FAIL %0d\", errors);");
  ln(o, "    end");
  ln(o, "    $finish;");
  ln(o, "  end");
  ln(o, "endmodule");
  return module_from_source(o);
}

std::vector<LibraryEntry> standard_library() {
  std::vector<LibraryEntry> lib;
  for (int w : {8, 16, 32}) {
    for (const auto& r : adder_rules()) {
      AdderUnit u = make_adder(r.kind, w);
      lib.push_back({emit_adder_module(u, w), adder_description(u, w)});
    }
    for (const auto& r : mult_rules()) {
      MultUnit u = make_mult(r.kind, w);
      lib.push_back({emit_mult_module(u, w), mult_description(u, w)});
      if (!has_identity_conditioning(u))
        lib.push_back({emit_pau_module(u, w), pau_description(u, w)});
    }
  }
  return lib;
}

std::string adder_description(const AdderUnit& u, int w) {
  std::string ws = n(w) + "-bit";
  std::string m = u.params.empty() ? "" : "m=" + nu(u.params[0]) + ", ";
  if (u.kind == "exact")
    return "exact " + ws + " adder, full carry propagation";
  if (u.kind == "loa")
    return "loa lower-or approximate " + ws + " adder, " + m +
           "low bits or-combined with carry capture";
  if (u.kind == "loa_nocarry")
    return "loa_nocarry lower-or approximate " + ws + " adder, " + m +
           "low bits or-combined, carry dropped";
  if (u.kind == "trunc")
    return "trunc truncated " + ws + " adder, " + m + "low result bits zeroed";
  if (u.kind == "soa")
    return "soa set-ones approximate " + ws + " adder, " + m +
           "low result bits forced to one";
  return u.kind + " " + ws + " adder";
}

std::string mult_description(const MultUnit& u, int w) {
  std::string ws = n(w) + "-bit";
  if (u.kind == "exact")
    return "exact " + ws + " multiplier, full precision product";
  if (u.kind == "bam")
    return "bam broken-array approximate " + ws + " multiplier, vbl=" +
           nu(u.params[0]) + ", partial product columns below the break dropped";
  if (u.kind == "alm_loa")
    return "alm_loa approximate logarithmic " + ws + " multiplier, m=" +
           nu(u.params[0]) + ", mitchell log domain with lower-or log-stage adder";
  if (u.kind == "alm_maa3")
    return "alm_maa3 approximate logarithmic " + ws + " multiplier, m=" +
           nu(u.params[0]) + ", mitchell log domain, approximate log-stage adder cell";
  if (u.kind == "alm_soa")
    return "alm_soa approximate logarithmic " + ws + " multiplier, m=" +
           nu(u.params[0]) + ", mitchell log domain with set-ones log-stage adder";
  if (u.kind == "asm")
    return "asm alphabet-set approximate " + ws + " multiplier, nibble_width=" +
           nu(u.params[0]) + " alphabets=" + nu(u.params[1]) +
           ", odd factor per nibble snapped to the alphabet";
  if (u.kind == "dralm")
    return "dralm dynamic-range approximate logarithmic " + ws +
           " multiplier, mult_dw=" + nu(u.params[0]) +
           ", truncated operands in the log domain";
  if (u.kind == "roba")
    return "roba rounding-based approximate " + ws +
           " multiplier, operands rounded to the nearest power of two";
  if (u.kind == "drum")
    return "drum dynamic-range unbiased " + ws + " multiplier, k=" +
           nu(u.params[0]) + ", leading-one segment with forced low bit";
  if (u.kind == "trunc")
    return "trunc truncated " + ws + " multiplier, mult_dw=" + nu(u.params[0]) +
           ", low operand bits zeroed before the multiply";
  return u.kind + " " + ws + " multiplier";
}

std::string pau_description(const MultUnit& u, int w) {
  std::string ws = n(w) + "-bit";
  if (u.kind == "drum")
    return "drum operand conditioning unit, " + ws +
           " leading-one segmenting, k=" + nu(u.params[0]) +
           ", forced low bit, shift exported";
  if (u.kind == "dralm")
    return "dralm operand conditioning unit, " + ws +
           " low-bit truncation by mult_dw=" + nu(u.params[0]);
  if (u.kind == "roba")
    return "roba operand conditioning unit, " + ws +
           " round to nearest power of two, ties up";
  return u.kind + " operand conditioning unit, " + ws + " pass-through";
}

}  // namespace tpugen
