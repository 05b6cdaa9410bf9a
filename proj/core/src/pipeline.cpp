#include "tpugen/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "httplib.h"
#include "tpugen/arith.hpp"
#include "tpugen/emitter.hpp"

namespace tpugen {
namespace {

constexpr const char* kRepairMarker = "\n\nPrevious attempt failed validation.";

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// The stub plays the role of a fine-tuned model: it recovers the spec from
// the prompt (everything before the repair marker reparses) and emits what
// the emitter would, then applies the scripted fault for this call.
std::string stub_complete(const LlmBackend& b, std::size_t call,
                          const std::string& prompt) {
  std::string base = prompt;
  auto cut = base.find(kRepairMarker);
  if (cut != std::string::npos) base = base.substr(0, cut);
  DesignSpec spec = canonicalize(parse_spec(base));
  TpuConfig cfg = spec_to_config(spec);

  std::string prefix, top;
  if (b.full_project) {
    auto proj = emit_project(cfg);
    for (std::size_t i = 0; i + 1 < proj.modules.size(); ++i)
      prefix += proj.modules[i].source;
    top = proj.modules.back().source;
  } else {
    top = emit_top(cfg).source;
  }

  LlmFault f = b.fault_plan.empty()
                   ? LlmFault::Ok
                   : b.fault_plan[call % b.fault_plan.size()];
  switch (f) {
    case LlmFault::Ok:
    case LlmFault::TruncateOutput:
      break;
    case LlmFault::HallucinateModuleName:
      replace_all(top, "controller_", "phantom_ctrl_");
      break;
    case LlmFault::WrongPortWidth: {
      int w = cfg.s * cfg.dw;
      replace_all(top, "[" + std::to_string(w - 1) + ":0] ifmap_wdata",
                  "[" + std::to_string(w - 2) + ":0] ifmap_wdata");
      break;
    }
    case LlmFault::BadHeader: {
      auto p1 = top.find('\n');
      auto p2 = top.find('\n', p1 + 1);
      top = top.substr(0, p1 + 1) + top.substr(p2 + 1);
      break;
    }
  }
  std::string text = prefix + top;
  if (f == LlmFault::TruncateOutput) text = text.substr(0, text.size() / 2);
  return text;
}

std::string http_complete(const LlmBackend& b, const std::string& prompt) {
  const std::string& ep = b.endpoint;
  auto scheme = ep.find("://");
  if (scheme == std::string::npos)
    throw LlmError("transport", "endpoint '" + ep + "' has no scheme");
  auto path_pos = ep.find('/', scheme + 3);
  std::string base = path_pos == std::string::npos ? ep : ep.substr(0, path_pos);
  std::string path = path_pos == std::string::npos ? "/" : ep.substr(path_pos);

  httplib::Client cli(base);
  cli.set_connection_timeout(b.timeout_s, 0);
  cli.set_read_timeout(b.timeout_s, 0);
  cli.set_write_timeout(b.timeout_s, 0);
  httplib::Headers headers;
  if (!b.auth_token.empty())
    headers.emplace("Authorization", "Bearer " + b.auth_token);

  nlohmann::json body;
  body["prompt"] = prompt;
  auto res = cli.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    bool timed = res.error() == httplib::Error::ConnectionTimeout ||
                 res.error() == httplib::Error::Read ||
                 res.error() == httplib::Error::Write;
    throw LlmError(timed ? "timeout" : "transport",
                   "post to '" + ep + "' failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200)
    throw LlmError("transport",
                   "http status " + std::to_string(res->status) + " from '" + ep + "'");
  auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.contains("text") || !j["text"].is_string())
    throw LlmError("protocol", "response body lacks a \"text\" string field");
  return j["text"].get<std::string>();
}

// find a standalone `module` keyword
std::size_t find_module_keyword(const std::string& s, std::size_t from) {
  for (std::size_t i = from; i + 6 <= s.size(); ++i) {
    if (s.compare(i, 6, "module") != 0) continue;
    bool lb = i == 0 || !(std::isalnum(static_cast<unsigned char>(s[i - 1])) ||
                          s[i - 1] == '_' || s[i - 1] == '$');
    bool rb = i + 6 < s.size() &&
              std::isspace(static_cast<unsigned char>(s[i + 6]));
    if (lb && rb) return i;
  }
  return std::string::npos;
}

bool is_comment_line(const std::string& s, std::size_t begin, std::size_t end) {
  while (begin < end && (s[begin] == ' ' || s[begin] == '\t')) ++begin;
  return begin + 1 < end && s[begin] == '/' && s[begin + 1] == '/';
}

// The reverse of the module naming scheme: add_/mul_ + kind + _w<W> +
// params in registry order. Returns false when the name does not bind.
template <class Rule, class Unit>
bool parse_unit_name(const std::string& rest, const std::vector<Rule>& rules,
                     Unit& unit, int& width) {
  for (const auto& r : rules) {
    std::string marker = r.kind + "_w";
    if (rest.rfind(marker, 0) != 0) continue;
    std::size_t p = marker.size();
    std::size_t dig = p;
    while (dig < rest.size() && std::isdigit(static_cast<unsigned char>(rest[dig])))
      ++dig;
    if (dig == p) continue;
    int w = std::stoi(rest.substr(p, dig - p));
    std::vector<u64> params;
    std::size_t q = dig;
    bool ok = true;
    for (const auto& ps : r.params) {
      std::string pm = "_" + ps.name;
      if (rest.compare(q, pm.size(), pm) != 0) {
        ok = false;
        break;
      }
      q += pm.size();
      std::size_t vd = q;
      while (vd < rest.size() && std::isdigit(static_cast<unsigned char>(rest[vd])))
        ++vd;
      if (vd == q) {
        ok = false;
        break;
      }
      params.push_back(std::stoull(rest.substr(q, vd - q)));
      q = vd;
    }
    if (!ok || q != rest.size()) continue;
    unit = Unit{r.kind, params};
    width = w;
    return true;
  }
  return false;
}

// Operand pairs for the walker sweep: exhaustive through 6 bits, else all
// corner combinations plus a fixed pseudorandom sample.
std::vector<std::pair<u64, u64>> sweep_pairs(int w) {
  std::vector<std::pair<u64, u64>> ps;
  if (w <= 6) {
    for (u64 a = 0; a < (u64(1) << w); ++a)
      for (u64 b = 0; b < (u64(1) << w); ++b) ps.emplace_back(a, b);
    return ps;
  }
  u64 mask = (u64(1) << w) - 1;
  u64 corners[] = {0, 1, mask, mask - 1, u64(1) << (w - 1)};
  for (u64 a : corners)
    for (u64 b : corners) ps.emplace_back(a, b);
  std::mt19937_64 rng(0x5eedULL * w + 1);
  for (int i = 0; i < 2048; ++i) ps.emplace_back(rng() & mask, rng() & mask);
  return ps;
}

// Module-level check: a record named like an arithmetic unit must carry a
// registered kind, legal params, and match the behavioral rule through the
// netlist walker on every swept operand pair.
bool unit_module_ok(const VerilogModule& rec) {
  bool is_add = rec.name.rfind("add_", 0) == 0;
  bool is_mul = rec.name.rfind("mul_", 0) == 0;
  if (!is_add && !is_mul) return true;
  try {
    int w = 0;
    VerilogModuleAst ast = parse_single_module(rec.source);
    if (is_add) {
      AdderUnit u;
      if (!parse_unit_name(rec.name.substr(4), adder_rules(), u, w)) return false;
      validate_adder(u, w);
      if (w > 63) return true;  // carry-out would not fit a walker value
      for (auto [a, b] : sweep_pairs(w)) {
        auto out = eval_combinational(ast, {{"a", a}, {"b", b}});
        if (out.at("y") != static_cast<u64>(approx_add(u, w, a, b))) return false;
      }
    } else {
      MultUnit u;
      if (!parse_unit_name(rec.name.substr(4), mult_rules(), u, w)) return false;
      validate_mult(u, w);
      for (auto [a, b] : sweep_pairs(w)) {
        auto out = eval_combinational(ast, {{"a", a}, {"b", b}});
        if (out.at("y") != approx_mul(u, w, a, b)) return false;
      }
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

VerilogProject finalize_project(const std::vector<VerilogModule>& records,
                                const VerilogModule& top,
                                const StoreIndex& store) {
  std::map<std::string, const VerilogModule*> own;
  for (const auto& r : records) own.emplace(r.name, &r);
  VerilogProject p;
  p.top = top;
  p.modules = ordered_closure(
      [&](const std::string& name) -> const VerilogModule* {
        auto it = own.find(name);
        if (it != own.end()) return it->second;
        auto st = store.by_name.find(name);
        return st == store.by_name.end() ? nullptr : &st->second.module;
      },
      top);
  p.manifest = project_manifest(top, p.modules);
  return p;
}

PipelineResult run_pipeline(const DesignSpec& spec, LlmBackend& backend,
                            const StoreIndex& store, int max_iters) {
  if (max_iters < 1) throw PipelineError("max_iters must be >= 1");
  DesignSpec canon = canonicalize(spec);
  std::string prompt = render_prompt(canon);

  PipelineResult res;
  for (int it = 0; it < max_iters && !res.valid; ++it) {
    TranscriptEntry entry;
    entry.prompt = prompt;
    std::string text;
    try {
      text = llm_complete(backend, prompt);
    } catch (const LlmError& e) {
      entry.error = e.kind + ": " + e.what();
      res.transcript.push_back(std::move(entry));
      continue;  // nothing to repair; retry the same prompt
    }
    entry.response = text;

    std::vector<VerilogModule> records;
    VerilogModule top;
    ValidationReport rep;
    bool shaped = false;
    try {
      records = records_from_text(text);
      top = find_top(records);
      shaped = true;
    } catch (const VerilogError& e) {
      rep.checked_levels = {"parse"};
      rep.reasons = {{ReasonKind::Unparseable, e.what()}};
    } catch (const PipelineError& e) {
      rep.checked_levels = {"parse"};
      rep.reasons = {{ReasonKind::Unparseable, e.what()}};
    }
    if (shaped) {
      VerilogProject attempt;
      attempt.top = top;
      attempt.modules = records;
      attempt.manifest = project_manifest(top, records);
      rep = validate(attempt, canon, store);
    }
    entry.report = rep;
    res.transcript.push_back(std::move(entry));

    if (rep.valid) {
      res.valid = true;
      res.project = finalize_project(records, top, store);
    } else {
      prompt = repair_prompt(canon, rep);
    }
  }
  res.iterations = static_cast<int>(res.transcript.size());
  return res;
}

u128 gcd128(u128 a, u128 b) {
  while (b) {
    u128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

}  // namespace

std::string fault_name(LlmFault f) {
  switch (f) {
    case LlmFault::Ok: return "ok";
    case LlmFault::TruncateOutput: return "truncate_output";
    case LlmFault::HallucinateModuleName: return "hallucinate_module_name";
    case LlmFault::WrongPortWidth: return "wrong_port_width";
    case LlmFault::BadHeader: return "bad_header";
  }
  return "?";
}

LlmFault fault_from_name(const std::string& name) {
  for (LlmFault f : {LlmFault::Ok, LlmFault::TruncateOutput,
                     LlmFault::HallucinateModuleName, LlmFault::WrongPortWidth,
                     LlmFault::BadHeader})
    if (fault_name(f) == name) return f;
  throw PipelineError("unknown fault '" + name + "'");
}

LlmBackend stub_backend(std::vector<LlmFault> plan, bool full_project) {
  LlmBackend b;
  b.kind = "deterministic_stub";
  b.fault_plan = std::move(plan);
  b.full_project = full_project;
  return b;
}

LlmBackend http_backend_from_env() {
  const char* ep = std::getenv("TPUGEN_LLM_ENDPOINT");
  if (!ep || !*ep)
    throw PipelineError("TPUGEN_LLM_ENDPOINT is not set");
  LlmBackend b;
  b.kind = "http_endpoint";
  b.endpoint = ep;
  if (const char* tok = std::getenv("TPUGEN_LLM_TOKEN")) b.auth_token = tok;
  return b;
}

std::string llm_complete(LlmBackend& backend, const std::string& prompt) {
  std::size_t call = backend.calls++;
  std::string text;
  if (backend.kind == "deterministic_stub")
    text = stub_complete(backend, call, prompt);
  else if (backend.kind == "http_endpoint")
    text = http_complete(backend, prompt);
  else
    throw PipelineError("unknown backend kind '" + backend.kind + "'");
  if (text.size() > backend.max_response_bytes)
    throw LlmError("over_cap", "response is " + std::to_string(text.size()) +
                                   " bytes, cap is " +
                                   std::to_string(backend.max_response_bytes));
  return text;
}

std::string extract_verilog(const std::string& response) {
  auto fence = response.find("```");
  if (fence != std::string::npos) {
    auto nl = response.find('\n', fence);
    if (nl != std::string::npos) {
      auto close = response.find("```", nl + 1);
      if (close != std::string::npos)
        return response.substr(nl + 1, close - nl - 1);
    }
  }
  std::size_t first = find_module_keyword(response, 0);
  std::size_t last = response.rfind("endmodule");
  if (first == std::string::npos || last == std::string::npos || last < first)
    throw PipelineError("no verilog module in the response");
  std::size_t end = last + 9;
  if (end < response.size() && response[end] == '\n') ++end;
  // pull in the comment block glued to the front of the first module
  std::size_t start = first;
  while (start > 0) {
    std::size_t line_start = response.rfind('\n', start - 2);
    line_start = line_start == std::string::npos ? 0 : line_start + 1;
    if (!is_comment_line(response, line_start, start)) break;
    start = line_start;
    if (start == 0) break;
  }
  return response.substr(start, end - start);
}

std::vector<VerilogModule> records_from_text(const std::string& response) {
  std::string text = extract_verilog(response);
  std::vector<VerilogModule> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find("endmodule", pos);
    std::string chunk;
    if (end == std::string::npos) {
      chunk = text.substr(pos);
      pos = text.size();
    } else {
      end += 9;
      if (end < text.size() && text[end] == '\n') ++end;
      chunk = text.substr(pos, end - pos);
      pos = end;
    }
    while (!chunk.empty() && (chunk.front() == '\n' || chunk.front() == '\r'))
      chunk.erase(chunk.begin());
    if (chunk.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    out.push_back(module_from_source(chunk));
  }
  if (out.empty()) throw PipelineError("no verilog module in the response");
  return out;
}

VerilogModule find_top(const std::vector<VerilogModule>& records) {
  std::set<std::string> instantiated;
  for (const auto& r : records)
    for (const auto& d : r.deps) instantiated.insert(d);
  std::vector<const VerilogModule*> roots;
  for (const auto& r : records)
    if (!instantiated.count(r.name)) roots.push_back(&r);
  if (roots.empty())
    throw PipelineError("no top candidate: every module is instantiated");
  if (roots.size() > 1) {
    std::string names;
    for (const auto* r : roots) names += (names.empty() ? "" : ", ") + r->name;
    throw PipelineError("multiple top candidates: " + names);
  }
  return *roots.front();
}

PipelineResult generate(const DesignSpec& spec, LlmBackend& backend,
                        const StoreIndex& store, int max_iters) {
  return run_pipeline(spec, backend, store, max_iters);
}

PipelineResult generate_without_rag(const DesignSpec& spec, LlmBackend& backend,
                                    int max_iters) {
  StoreIndex empty;
  empty.digest = digest_hex("");
  return run_pipeline(spec, backend, empty, max_iters);
}

std::string repair_prompt(const DesignSpec& spec,
                          const ValidationReport& report) {
  if (report.valid)
    throw PipelineError("repair_prompt wants an invalid report");
  std::string p = render_prompt(canonicalize(spec));
  p += kRepairMarker;
  p += "\nFix the following problems and return the corrected Verilog.\n";
  for (const auto& r : report.reasons)
    p += "- " + reason_kind_name(r.kind) + ": " + r.detail + "\n";
  return p;
}

std::pair<u64, u64> pass_at_k_rational(int n, int c, int k) {
  if (n < 1 || c < 0 || c > n || k < 1 || k > n)
    throw PipelineError("pass_at_k wants 0 <= c <= n and 1 <= k <= n");
  if (k > n - c) return {1, 1};  // any k-subset hits a success
  u128 num = 1, den = 1;
  const u128 limit = ~u128(0) / (u128(n) + 1);
  for (int i = 0; i < k; ++i) {
    if (num > limit || den > limit) throw PipelineError("pass_at_k overflow");
    num *= u128(n - c - i);
    den *= u128(n - i);
    u128 g = gcd128(num, den);
    num /= g;
    den /= g;
  }
  u128 rn = den - num;
  u128 g = gcd128(rn, den);
  rn /= g;
  den /= g;
  if (rn > u128(~u64(0)) || den > u128(~u64(0)))
    throw PipelineError("pass_at_k overflow");
  return {static_cast<u64>(rn), static_cast<u64>(den)};
}

double pass_at_k(int n, int c, int k) {
  auto [num, den] = pass_at_k_rational(n, c, k);
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string eval_to_csv(const EvalTable& t) {
  std::string s = "spec_id,check,k,pass_rate\n";
  char buf[32];
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof buf, "%.6f", r.pass_rate);
    s += r.spec_id + "," + r.check + "," + std::to_string(r.k) + "," + buf + "\n";
  }
  return s;
}

EvalTable eval_from_csv(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line) || line != "spec_id,check,k,pass_rate")
    throw PipelineError("bad eval csv header");
  EvalTable t;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto parts = split(line, ',');
    if (parts.size() != 4) throw PipelineError("bad eval csv row: " + line);
    EvalRow r;
    r.spec_id = parts[0];
    r.check = parts[1];
    r.k = std::stoi(parts[2]);
    r.pass_rate = std::stod(parts[3]);
    t.rows.push_back(std::move(r));
  }
  return t;
}

EvalTable evaluate_backend(const std::vector<DesignSpec>& specs,
                           LlmBackend& backend, const StoreIndex& store,
                           int n_attempts, const std::vector<int>& ks) {
  if (ks.empty()) throw PipelineError("no k values given");
  for (int k : ks)
    if (k < 1 || k > n_attempts)
      throw PipelineError("every k must satisfy 1 <= k <= n_attempts");

  EvalTable t;
  std::vector<std::vector<double>> agg_module(ks.size()), agg_integ(ks.size());
  for (std::size_t si = 0; si < specs.size(); ++si) {
    DesignSpec canon = canonicalize(specs[si]);
    std::string id =
        canon.label.empty() ? "spec" + std::to_string(si) : canon.label;
    std::string prompt = render_prompt(canon);
    int c_module = 0, c_integ = 0;
    for (int a = 0; a < n_attempts; ++a) {
      std::string text;
      try {
        text = llm_complete(backend, prompt);
      } catch (const LlmError&) {
        continue;  // fails both checks
      }
      std::vector<VerilogModule> records;
      bool mod_ok = true;
      try {
        records = records_from_text(text);
      } catch (const std::exception&) {
        mod_ok = false;
      }
      if (mod_ok)
        for (const auto& r : records)
          if (!unit_module_ok(r)) {
            mod_ok = false;
            break;
          }
      if (mod_ok) ++c_module;
      if (!records.empty()) {
        try {
          VerilogModule top = find_top(records);
          VerilogProject attempt;
          attempt.top = top;
          attempt.modules = records;
          attempt.manifest = project_manifest(top, records);
          if (validate(attempt, canon, store).valid) ++c_integ;
        } catch (const std::exception&) {
        }
      }
    }
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      double pm = pass_at_k(n_attempts, c_module, ks[ki]);
      double pi = pass_at_k(n_attempts, c_integ, ks[ki]);
      t.rows.push_back({id, "module", ks[ki], pm});
      t.rows.push_back({id, "integration", ks[ki], pi});
      agg_module[ki].push_back(pm);
      agg_integ[ki].push_back(pi);
    }
  }
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    t.rows.push_back({"aggregate", "module", ks[ki], mean(agg_module[ki])});
    t.rows.push_back({"aggregate", "integration", ks[ki], mean(agg_integ[ki])});
  }
  return t;
}

}  // namespace tpugen
