#pragma once

// End-to-end generation: prompt -> backend completion -> Verilog extraction
// -> retrieval-assisted assembly -> validation -> repair loop, plus the
// pass@k evaluation harness. The deterministic stub backend replays a
// scripted fault sequence so the whole loop runs offline; the http backend
// posts to any completion endpoint.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tpugen/design.hpp"
#include "tpugen/store.hpp"
#include "tpugen/validator.hpp"

namespace tpugen {

struct PipelineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LlmError : std::runtime_error {
  std::string kind;  // transport | timeout | over_cap | protocol
  LlmError(std::string k, const std::string& msg)
      : std::runtime_error(msg), kind(std::move(k)) {}
};

enum class LlmFault {
  Ok,
  TruncateOutput,
  HallucinateModuleName,
  WrongPortWidth,
  BadHeader,
};

std::string fault_name(LlmFault f);
LlmFault fault_from_name(const std::string& name);

struct LlmBackend {
  std::string kind = "deterministic_stub";  // or "http_endpoint"
  std::string endpoint;                     // http://host:port/path
  std::string auth_token;                   // sent as a bearer header
  int timeout_s = 30;
  std::size_t max_response_bytes = 16 * 1024;
  // stub: return the whole closure instead of just the top module
  bool full_project = false;
  std::vector<LlmFault> fault_plan = {LlmFault::Ok};  // cycled per call
  std::size_t calls = 0;
};

LlmBackend stub_backend(std::vector<LlmFault> plan, bool full_project = false);
// Reads TPUGEN_LLM_ENDPOINT and TPUGEN_LLM_TOKEN.
LlmBackend http_backend_from_env();

// One completion. The response cap applies to every backend; going over it
// is an LlmError("over_cap"), transport and protocol failures keep their
// own kinds so transcripts can tell them apart.
std::string llm_complete(LlmBackend& backend, const std::string& prompt);

// First fenced code block when the response has one, else the span from the
// first `module` keyword through the last `endmodule`, extended backward
// over the comment block glued to the front (that keeps config headers).
std::string extract_verilog(const std::string& response);

// Split extracted text at endmodule boundaries and parse each chunk.
std::vector<VerilogModule> records_from_text(const std::string& response);

// The unique module no other record instantiates; PipelineError when the
// root is absent or ambiguous.
VerilogModule find_top(const std::vector<VerilogModule>& records);

struct TranscriptEntry {
  std::string prompt;
  std::string response;  // empty when the backend call failed
  std::string error;     // backend failure text, empty otherwise
  ValidationReport report;
};

struct PipelineResult {
  bool valid = false;
  std::optional<VerilogProject> project;  // self-contained when valid
  int iterations = 0;
  std::vector<TranscriptEntry> transcript;
};

// Loop: render prompt, complete, extract, validate against the spec with
// the store supplying library modules, repair on Invalid. On success the
// returned project folds the store modules in, so it validates on its own.
PipelineResult generate(const DesignSpec& spec, LlmBackend& backend,
                        const StoreIndex& store, int max_iters = 3);

// Same loop with no store: the backend must produce the complete project.
PipelineResult generate_without_rag(const DesignSpec& spec, LlmBackend& backend,
                                    int max_iters = 3);

// Original prompt plus a fixed-format error section listing every reason.
std::string repair_prompt(const DesignSpec& spec,
                          const ValidationReport& report);

// 1 - C(n-c,k)/C(n,k), reduced; and its decimal value.
std::pair<u64, u64> pass_at_k_rational(int n, int c, int k);
double pass_at_k(int n, int c, int k);

struct EvalRow {
  std::string spec_id;
  std::string check;  // "module" or "integration"
  int k = 0;
  double pass_rate = 0.0;
};

struct EvalTable {
  std::vector<EvalRow> rows;
};

std::string eval_to_csv(const EvalTable& t);
EvalTable eval_from_csv(const std::string& csv);

// n single-shot attempts per spec (no repair loop; attempts are the
// samples pass@k is estimated over). Checks: "module" = every record
// parses and each named arithmetic unit matches its behavioral rule
// through the netlist walker (exhaustively through 6 bits, corner plus
// fixed random sweep above); "integration" = the assembled project
// validates. Aggregate rows average the per-spec rates.
EvalTable evaluate_backend(const std::vector<DesignSpec>& specs,
                           LlmBackend& backend, const StoreIndex& store,
                           int n_attempts, const std::vector<int>& ks);

}  // namespace tpugen
