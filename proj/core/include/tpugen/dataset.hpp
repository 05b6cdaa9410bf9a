#pragma once

// Design-grid enumeration and dataset records: walk the (size, dw, ww,
// mult, adder) grid in a stable order, build one record per valid config
// (project digests, templated descriptions, PPA, unit error summary), and
// persist everything as JSONL plus a flat top-file directory.
//
// PPA comes from pluggable adapters. The mock adapter is a documented
// analytical model (synthetic on purpose, deterministic, monotone in array
// size and widths) so search and tests run offline; the synth/pnr adapters
// shell out to whatever the environment points them at and parse a pinned
// report grammar.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tpugen/config.hpp"
#include "tpugen/metrics.hpp"
#include "tpugen/store.hpp"
#include "tpugen/validator.hpp"

namespace tpugen {

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AdapterUnavailable : DatasetError {
  std::string name;
  explicit AdapterUnavailable(const std::string& n)
      : DatasetError("ppa adapter '" + n + "' unavailable: environment does "
                     "not point at a tool"),
        name(n) {}
};

// Axes of the enumeration. Unit axes use the same mini-syntax the spec
// parser accepts ("drum", "drum:k=6", "loa:m=4"); params left out resolve
// to width-dependent defaults at each grid point.
struct GridSpec {
  std::vector<int> sizes;             // subset of kSupportedSizes
  std::vector<int> dws;               // subset of kSupportedDws
  std::vector<int> wws;               // within [kMinWw, kMaxWw]
  std::vector<std::string> mults;     // unit texts
  std::vector<std::string> adders;    // unit texts

  bool operator==(const GridSpec&) const = default;
};

// Sorted-unique numeric axes, deduped unit axes in given order. Throws
// DatasetError on empty axes, out-of-range values, or a unit text that
// does not resolve at some width the grid can reach.
GridSpec canonical_grid(const GridSpec& grid);

u64 grid_size(const GridSpec& grid);

// Element i of the lexicographic enumeration over (size, dw, ww, mult,
// adder), adder axis fastest. Random access is what makes streaming
// restartable: begin at any index and get the same tail.
TpuConfig grid_config_at(const GridSpec& grid, u64 i);

std::vector<TpuConfig> enumerate_grid(const GridSpec& grid, u64 begin = 0,
                                      u64 count = ~u64(0));

nlohmann::json grid_to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& j);

struct PpaMetrics {
  double area_um2 = 0;
  double power_mw = 0;
  double critical_path_ns = 0;
  double latency_ms = 0;  // cycles(S, K) x clock period for the declared K
  std::string tool;       // adapter identity + version

  bool operator==(const PpaMetrics&) const = default;
};

nlohmann::json ppa_to_json(const PpaMetrics& m);
PpaMetrics ppa_from_json(const nlohmann::json& j);

struct PpaAdapter {
  std::string name;     // "mock" | "synth_tool" | "pnr_tool"
  std::string version;
  // fills area/power/critical path; latency and tool are stamped on top
  std::function<PpaMetrics(const VerilogProject&, u64 workload_k)> run;
};

PpaAdapter mock_ppa_adapter();
// Shell adapters read TPUGEN_SYNTH_CMD / TPUGEN_PNR_CMD; unset or empty
// means AdapterUnavailable. The tool is run as `<cmd> <project_dir>` in a
// private work directory and must print the v1 report grammar:
//   PPA_REPORT v1
//   TOOL: <name and version>
//   CELL_AREA_UM2: <number>
//   CRITICAL_PATH_NS: <number>
//   POWER_MW: <number>
// Anything else is an explicit error, never a silent default.
PpaAdapter synth_ppa_adapter();
PpaAdapter pnr_ppa_adapter();
PpaAdapter ppa_adapter_by_name(const std::string& name);

PpaMetrics run_ppa(const PpaAdapter& adapter, const VerilogProject& proj,
                   u64 workload_k);

struct ModuleNote {
  std::string name;
  std::string summary;     // one line
  std::string source_ref;  // "top.v" or "rtl/<name>.v" in the project dir

  bool operator==(const ModuleNote&) const = default;
};

struct DatasetRecord {
  std::string id;  // content digest; stable across runs of the same config
  TpuConfig config;
  std::string high_level;  // the exact prompt-template paragraph
  std::vector<ModuleNote> blocks;
  std::vector<std::string> code_modules;  // dependency order, top last
  std::string top_digest;
  PpaMetrics ppa;
  ErrorReport unit_error;  // multiplier-at-mult-width summary
  u64 workload_k = 0;
  u64 seed = 0;
  std::string adapter;
  std::string timestamp;

  bool operator==(const DatasetRecord&) const = default;
};

struct RejectedConfig : DatasetError {
  TpuConfig config;
  ValidationReport report;
  RejectedConfig(const TpuConfig& c, const ValidationReport& r);
};

struct BuildOptions {
  u64 workload_k = 64;
  u64 seed = 1;            // sampled error sweep seed
  u64 error_samples = 65536;
  std::string timestamp;   // empty = current UTC time
};

// emit -> validate -> ppa -> unit error summary -> templated descriptions.
// Invalid configs throw RejectedConfig (log material, not a record).
DatasetRecord build_record(const TpuConfig& cfg, const StoreIndex& store,
                           const PpaAdapter& adapter,
                           const BuildOptions& opts = {});

nlohmann::json record_to_json(const DatasetRecord& r);
DatasetRecord record_from_json(const nlohmann::json& j);

// One JSONL line for the rejected-config log.
nlohmann::json rejection_to_json(const TpuConfig& cfg,
                                 const ValidationReport& report);

// JSONL at path plus the flat top-file variant: <stem>_tops/<id>.v, each
// regenerated from the record's config and digest-checked against it.
void write_dataset(const std::vector<DatasetRecord>& records,
                   const std::string& path);
// Malformed lines are reported with their line number.
std::vector<DatasetRecord> read_dataset(const std::string& path);

}  // namespace tpugen
