#pragma once

// Project classification with reason codes. Checks run in levels: parse
// every source, resolve the dependency closure (library modules may come
// from the store instead of the project), lint port names and connection
// widths at every instantiation, compare the config header against the
// design spec, then cross-check the behavioral simulator against a scalar
// mac fold. The first level that finds problems ends the run, reporting
// everything found at that level.

#include <stdexcept>
#include <string>
#include <vector>

#include "tpugen/config.hpp"
#include "tpugen/design.hpp"
#include "tpugen/store.hpp"
#include "tpugen/verilog.hpp"

namespace tpugen {

enum class ReasonKind {
  Unparseable,
  MissingModule,
  PortMismatch,
  WidthMismatch,
  BadHeader,
  ConfigMismatch,
  FunctionalMismatch,
};

std::string reason_kind_name(ReasonKind k);

struct ValidationReason {
  ReasonKind kind = ReasonKind::Unparseable;
  std::string detail;  // for MissingModule this is the bare module name

  bool operator==(const ValidationReason&) const = default;
};

struct ValidationReport {
  bool valid = false;
  std::vector<ValidationReason> reasons;    // empty iff valid
  std::vector<std::string> checked_levels;  // in execution order

  bool has(ReasonKind k) const;
  bool operator==(const ValidationReport&) const = default;
};

nlohmann::json report_to_json(const ValidationReport& r);

struct HeaderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reads the machine config comment on line 2 of the top source.
TpuConfig extract_config_from_top(const VerilogModule& top);

ValidationReport validate(const VerilogProject& project, const DesignSpec& spec,
                          const StoreIndex& store);

}  // namespace tpugen
