#pragma once

// Bit-accurate behavioral models of the exact and approximate adders and
// multipliers, plus the operand-conditioning (PAU) / core-multiply (APE)
// decomposition used by the systolic template. All values are unsigned
// magnitudes; width W is carried alongside the unit, not inside it, so the
// same unit value can be evaluated at different widths (e.g. an adder reused
// at accumulator width).

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tpugen/common.hpp"

namespace tpugen {

struct ParamError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operand after pre-processing. Reconstructed magnitude is mantissa << shift.
// aux carries the original operand for rules whose core multiply needs it
// (round-to-power-of-two keeps the rounded value in mantissa/shift and the
// raw operand in aux). sign is +1/-1; the unsigned pipeline always uses +1.
struct ConditionedOperand {
  u64 mantissa = 0;
  int shift = 0;
  int sign = 1;
  u64 aux = 0;

  bool operator==(const ConditionedOperand&) const = default;
};

// ---- unit registry ----

struct ParamSpec {
  std::string name;            // canonical lower-case
  u64 (*def)(int w);           // default value at operand width w
  bool (*ok)(u64 v, int w);    // range check
};

struct AdderRule {
  std::string kind;
  std::vector<ParamSpec> params;
  // result is W+1 bits; operands pre-masked to W bits by the caller
  u128 (*eval)(int w, const std::vector<u64>& p, u64 a, u64 b);
};

struct MultRule {
  std::string kind;
  std::vector<ParamSpec> params;
  bool identity_conditioning;  // true: pau is a pass-through
  u64 (*eval)(int w, const std::vector<u64>& p, u64 a, u64 b);
  // condition/core may be null for identity kinds
  ConditionedOperand (*condition)(int w, const std::vector<u64>& p, u64 x);
  u64 (*core)(int w, const std::vector<u64>& p, const ConditionedOperand& ca,
              const ConditionedOperand& cb);
};

// Case-insensitive lookup; nullptr when the name is not registered.
const AdderRule* find_adder_rule(std::string_view kind);
const MultRule* find_mult_rule(std::string_view kind);
const std::vector<AdderRule>& adder_rules();
const std::vector<MultRule>& mult_rules();

// New rules slot in by name; duplicate names are rejected.
void register_adder_rule(const AdderRule& r);
void register_mult_rule(const MultRule& r);

// ---- resolved units ----

// kind plus parameter values in registry-declared order.
struct AdderUnit {
  std::string kind;
  std::vector<u64> params;
  bool operator==(const AdderUnit&) const = default;
};

struct MultUnit {
  std::string kind;
  std::vector<u64> params;
  bool operator==(const MultUnit&) const = default;
};

constexpr int kMinAdderWidth = 2, kMaxAdderWidth = 64;
constexpr int kMinMultWidth = 2, kMaxMultWidth = 32;

// Resolve defaults for unnamed params and validate everything; overrides
// keyed by param name. Throws ParamError on unknown kind/param or range.
AdderUnit make_adder(const std::string& kind, int w,
                     const std::map<std::string, u64>& overrides = {});
MultUnit make_mult(const std::string& kind, int w,
                   const std::map<std::string, u64>& overrides = {});

void validate_adder(const AdderUnit& u, int w);
void validate_mult(const MultUnit& u, int w);

// Named parameter access on a resolved unit.
u64 adder_param(const AdderUnit& u, std::string_view name);
u64 mult_param(const MultUnit& u, std::string_view name);

// Mini-syntax `NAME[:param=value,...]`, e.g. `drum:k=6`, `loa:m=4`.
// parse_* resolve defaults at width w; render_* emit every param explicitly
// in registry order, so the text is canonical and injective per width.
AdderUnit parse_adder_text(const std::string& text, int w);
MultUnit parse_mult_text(const std::string& text, int w);
std::string render_adder(const AdderUnit& u);
std::string render_mult(const MultUnit& u);

// ---- evaluation ----

// Result is W+1 bits wide (u128 because W may be 64).
u128 approx_add(const AdderUnit& u, int w, u64 a, u64 b);

// Result is 2W bits wide. A zero operand always yields zero, for every kind.
u64 approx_mul(const MultUnit& u, int w, u64 a, u64 b);

ConditionedOperand pau_condition(const MultUnit& u, int w, u64 x);

// Composition law: ape_core_mul(pau(a), pau(b)) == approx_mul(a, b).
u64 ape_core_mul(const MultUnit& u, int w, const ConditionedOperand& ca,
                 const ConditionedOperand& cb);

bool has_identity_conditioning(const MultUnit& u);

// ---- MAC ----

int mult_width(int dw, int ww);  // max of the two operand widths

// 2W guard-banded by the deepest supported accumulation chain, clamped to
// what a 64-bit accumulator can hold.
int default_acc_width(int dw, int ww, int k_max = 4096);

struct MacConfig {
  int dw = 8;
  int ww = 8;
  int acc_width = 28;
  MultUnit mult;
  AdderUnit adder;
};

struct MacResult {
  u64 value = 0;
  bool wrapped = false;
};

// acc + a*b through the configured units; the add runs at acc_width and the
// result wraps modulo 2^acc_width with the wrap recorded.
MacResult mac_step(const MacConfig& cfg, u64 acc, u64 a, u64 b);

}  // namespace tpugen
