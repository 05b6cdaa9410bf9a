#pragma once

// Free-form design-intent extraction and the prompt template. parse_spec
// collects every grammar match (contradictions are errors, never
// first-match-wins), canonicalize applies documented defaults and range
// checks, and render_prompt emits the byte-stable template that the
// generation pipeline and dataset descriptions share.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "tpugen/config.hpp"

namespace tpugen {

struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Budget {
  std::optional<double> power_mw;
  std::optional<double> area_mm2;
  std::optional<double> latency_ms;

  bool operator==(const Budget&) const = default;
};

// A unit selection as the user stated it: kind plus the explicitly given
// params. canonicalize resolves the full param set.
struct UnitChoice {
  std::string kind;
  std::map<std::string, u64> params;

  bool operator==(const UnitChoice&) const = default;
};

struct DesignSpec {
  std::optional<int> rows, cols;
  std::optional<int> dw, ww;
  std::optional<UnitChoice> mult, adder;
  std::optional<Budget> budget;
  std::optional<double> clock_ns;
  std::string label;

  bool operator==(const DesignSpec&) const = default;
};

// Extract whatever the grammar matches; unmatched features stay unbound.
// Throws SpecError on contradictory bindings (listing both matches) and on
// malformed explicit unit syntax.
DesignSpec parse_spec(const std::string& text);

// Fill unbound fields with defaults (8x8, dw=8, ww=8, exact/exact, 2ns
// clock, no budget), resolve unit params at their operating widths, and
// range-check everything. Throws SpecError on out-of-range values.
DesignSpec canonicalize(const DesignSpec& spec);

// Deterministic template over a fully bound spec; injective; reparses to the
// same spec. Throws SpecError if the spec is not fully bound.
std::string render_prompt(const DesignSpec& spec);

nlohmann::json spec_to_json(const DesignSpec& spec);

// Bridge to the resolved hardware configuration (requires rows == cols).
TpuConfig spec_to_config(const DesignSpec& canonical);
DesignSpec config_to_spec(const TpuConfig& cfg);

}  // namespace tpugen
