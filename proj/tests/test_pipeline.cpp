#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tpugen/design.hpp"
#include "tpugen/emitter.hpp"
#include "tpugen/pipeline.hpp"
#include "tpugen/store.hpp"
#include "tpugen/validator.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"

using namespace tpugen;

namespace {

TpuConfig small_cfg() {
  return default_config(4, 8, 8, make_mult("exact", 8), make_adder("exact", 8));
}

// library plus the structural modules of one emitted project, deduped
StoreIndex full_store(const VerilogProject& proj) {
  std::vector<StoreEntry> entries;
  std::set<std::string> seen;
  for (const auto& le : standard_library()) {
    seen.insert(le.module.name);
    entries.push_back({le.module, le.description});
  }
  for (const auto& m : proj.modules)
    if (seen.insert(m.name).second)
      entries.push_back({m, "systolic array building block " + m.name});
  return build_index(entries);
}

StoreIndex empty_store() { return build_index({}); }

std::string concat_sources(const VerilogProject& proj) {
  std::string all;
  for (const auto& m : proj.modules) all += m.source;
  return all;
}

}  // namespace

TEST_CASE("stub backend mirrors the emitter and splits repair prompts") {
  TpuConfig cfg = small_cfg();
  DesignSpec spec = config_to_spec(cfg);
  std::string prompt = render_prompt(canonicalize(spec));

  LlmBackend top_only = stub_backend({LlmFault::Ok});
  CHECK(llm_complete(top_only, prompt) == emit_top(cfg).source);
  CHECK(top_only.calls == 1);

  LlmBackend whole = stub_backend({LlmFault::Ok}, true);
  whole.max_response_bytes = 1 << 20;
  CHECK(llm_complete(whole, prompt) == concat_sources(emit_project(cfg)));

  // repair prompts carry validator prose after the marker; the stub must
  // recover the same spec from the leading section alone
  ValidationReport bad;
  bad.reasons = {{ReasonKind::MissingModule, "controller_s9_k16"}};
  bad.checked_levels = {"parse", "closure"};
  std::string repaired = repair_prompt(spec, bad);
  CHECK(repaired.find(prompt) == 0);
  CHECK(repaired.find("MissingModule: controller_s9_k16") != std::string::npos);
  LlmBackend again = stub_backend({LlmFault::Ok});
  CHECK(llm_complete(again, repaired) == emit_top(cfg).source);

  ValidationReport fine;
  fine.valid = true;
  CHECK_THROWS_AS(repair_prompt(spec, fine), PipelineError);

  for (LlmFault f : {LlmFault::Ok, LlmFault::TruncateOutput,
                     LlmFault::HallucinateModuleName, LlmFault::WrongPortWidth,
                     LlmFault::BadHeader})
    CHECK(fault_from_name(fault_name(f)) == f);
  CHECK_THROWS_AS(fault_from_name("segfault"), PipelineError);
}

TEST_CASE("verilog extraction handles fences, prose, and comment preludes") {
  CHECK(extract_verilog("text\n```verilog\nmodule f ();\nendmodule\n```\nbye") ==
        "module f ();\nendmodule\n");

  std::string prose =
      "Sure thing!\nHere you go:\n// top of file\n// TPUGEN {}\n"
      "module m ();\n  wire w;\nendmodule\nHope this helps";
  CHECK(extract_verilog(prose) ==
        "// top of file\n// TPUGEN {}\nmodule m ();\n  wire w;\nendmodule\n");

  // `endmodule` before the first real `module` keyword is not a start token
  std::string odd = "endmodule\nmodule m ();\nendmodule\n";
  CHECK(extract_verilog(odd) == "module m ();\nendmodule\n");

  // idempotent on clean emitter output, prefix or not
  std::string top = emit_top(small_cfg()).source;
  CHECK(extract_verilog(top) == top);
  CHECK(extract_verilog("Sure!\n\n" + top + "\nThat's it.") == top);

  CHECK_THROWS_AS(extract_verilog("no rtl here, sorry"), PipelineError);
  CHECK_THROWS_AS(extract_verilog("module truncated (\n  input wire"),
                  PipelineError);
}

TEST_CASE("record splitting reproduces emitted sources and finds the root") {
  VerilogProject proj = emit_project(small_cfg());
  std::vector<VerilogModule> recs = records_from_text(concat_sources(proj));
  REQUIRE(recs.size() == proj.modules.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(recs[i].name == proj.modules[i].name);
    CHECK(recs[i].source == proj.modules[i].source);
  }
  CHECK(find_top(recs).name == proj.top.name);

  std::vector<VerilogModule> two = {
      module_from_source("module r1 ();\n  wire w;\nendmodule\n"),
      module_from_source("module r2 ();\n  wire w;\nendmodule\n")};
  CHECK_THROWS_WITH_AS(find_top(two), doctest::Contains("multiple top"),
                       PipelineError);

  std::vector<VerilogModule> ring = {
      module_from_source("module c1 ();\n  c2 u ();\nendmodule\n"),
      module_from_source("module c2 ();\n  c1 u ();\nendmodule\n")};
  CHECK_THROWS_WITH_AS(find_top(ring), doctest::Contains("no top"),
                       PipelineError);
}

TEST_CASE("generate succeeds first try and returns a self-contained project") {
  TpuConfig cfg = small_cfg();
  DesignSpec spec = config_to_spec(cfg);
  VerilogProject want = emit_project(cfg);
  StoreIndex store = full_store(want);

  LlmBackend b = stub_backend({LlmFault::Ok});
  PipelineResult res = generate(spec, b, store);
  REQUIRE(res.valid);
  CHECK(res.iterations == 1);
  REQUIRE(res.transcript.size() == 1);
  CHECK(res.transcript[0].error.empty());
  CHECK(res.transcript[0].report.valid);
  CHECK(res.transcript[0].response == emit_top(cfg).source);

  // the store fills in everything below the top, byte for byte
  REQUIRE(res.project.has_value());
  CHECK(res.project->top == want.top);
  CHECK(res.project->modules == want.modules);
  CHECK(res.project->manifest == want.manifest);

  // and the result stands alone: no store needed to validate it again
  CHECK(validate(*res.project, spec, empty_store()).valid);
}

TEST_CASE("hallucinated submodule is repaired on the second attempt") {
  TpuConfig cfg = small_cfg();
  DesignSpec spec = config_to_spec(cfg);
  StoreIndex store = full_store(emit_project(cfg));

  LlmBackend b = stub_backend({LlmFault::HallucinateModuleName, LlmFault::Ok});
  PipelineResult res = generate(spec, b, store);
  REQUIRE(res.valid);
  CHECK(res.iterations == 2);
  REQUIRE(res.transcript.size() == 2);

  const ValidationReport& first = res.transcript[0].report;
  CHECK_FALSE(first.valid);
  REQUIRE(first.has(ReasonKind::MissingModule));
  bool phantom = false;
  for (const auto& r : first.reasons)
    phantom |= r.detail.find("phantom_ctrl_") == 0;
  CHECK(phantom);

  // the second prompt names the missing module so the model can fix it
  CHECK(res.transcript[1].prompt.find("phantom_ctrl_") != std::string::npos);
  CHECK(res.transcript[1].prompt.find("MissingModule") != std::string::npos);
  CHECK(res.transcript[1].report.valid);
  CHECK(validate(*res.project, spec, empty_store()).valid);
}

TEST_CASE("persistent faults exhaust the iteration budget with honest reasons") {
  TpuConfig cfg = small_cfg();
  DesignSpec spec = config_to_spec(cfg);
  StoreIndex store = full_store(emit_project(cfg));

  std::vector<LlmFault> plan = {LlmFault::TruncateOutput, LlmFault::BadHeader,
                                LlmFault::WrongPortWidth};
  LlmBackend b = stub_backend(plan);
  PipelineResult res = generate(spec, b, store, 3);
  CHECK_FALSE(res.valid);
  CHECK_FALSE(res.project.has_value());
  CHECK(res.iterations == 3);
  REQUIRE(res.transcript.size() == 3);

  CHECK(res.transcript[0].report.has(ReasonKind::Unparseable));
  CHECK(res.transcript[0].report.checked_levels ==
        std::vector<std::string>{"parse"});
  CHECK(res.transcript[1].report.has(ReasonKind::BadHeader));
  CHECK(res.transcript[2].report.has(ReasonKind::WidthMismatch));

  LlmBackend b1 = stub_backend(plan);
  CHECK(generate(spec, b1, store, 1).iterations == 1);
  LlmBackend b0 = stub_backend(plan);
  CHECK_THROWS_AS(generate(spec, b0, store, 0), PipelineError);
}

TEST_CASE("response cap separates retrieval-assisted from full-project runs") {
  TpuConfig cfg = small_cfg();
  DesignSpec spec = config_to_spec(cfg);
  VerilogProject want = emit_project(cfg);
  StoreIndex store = full_store(want);

  std::size_t top_size = want.top.source.size();
  std::size_t all_size = concat_sources(want).size();
  REQUIRE(top_size < all_size);
  std::size_t cap = (top_size + all_size) / 2;

  // with retrieval the model only writes the top module, which fits
  LlmBackend rag = stub_backend({LlmFault::Ok});
  rag.max_response_bytes = cap;
  CHECK(generate(spec, rag, store).valid);

  // without retrieval the whole closure must come back and blows the cap
  LlmBackend no_rag = stub_backend({LlmFault::Ok}, true);
  no_rag.max_response_bytes = cap;
  PipelineResult blown = generate_without_rag(spec, no_rag);
  CHECK_FALSE(blown.valid);
  CHECK(blown.iterations == 3);
  for (const auto& e : blown.transcript) {
    CHECK(e.response.empty());
    CHECK(e.error.find("over_cap") == 0);
  }

  // raise the cap and the ablation run succeeds, matching the emitter
  LlmBackend roomy = stub_backend({LlmFault::Ok}, true);
  roomy.max_response_bytes = 1 << 20;
  PipelineResult ok = generate_without_rag(spec, roomy);
  REQUIRE(ok.valid);
  CHECK(ok.project->modules == want.modules);
  CHECK(ok.project->manifest == want.manifest);

  // a truncated full project loses its top and stops being well formed
  LlmBackend chopped = stub_backend({LlmFault::TruncateOutput}, true);
  chopped.max_response_bytes = 1 << 20;
  PipelineResult cut = generate_without_rag(spec, chopped, 1);
  CHECK_FALSE(cut.valid);
  CHECK(cut.transcript[0].report.has(ReasonKind::Unparseable));
}

TEST_CASE("pass@k closed form") {
  using R = std::pair<u64, u64>;
  CHECK(pass_at_k_rational(10, 10, 1) == R{1, 1});
  CHECK(pass_at_k_rational(10, 0, 1) == R{0, 1});
  CHECK(pass_at_k_rational(10, 0, 10) == R{0, 1});
  CHECK(pass_at_k_rational(10, 5, 1) == R{1, 2});
  CHECK(pass_at_k_rational(10, 5, 5) == R{251, 252});
  CHECK(pass_at_k_rational(10, 5, 6) == R{1, 1});  // k > n-c forces a hit
  CHECK(pass_at_k_rational(4, 2, 2) == R{5, 6});
  CHECK(pass_at_k_rational(1, 0, 1) == R{0, 1});
  CHECK(pass_at_k_rational(1, 1, 1) == R{1, 1});
  CHECK(pass_at_k(10, 5, 1) == doctest::Approx(0.5));
  CHECK(pass_at_k(10, 5, 5) == doctest::Approx(251.0 / 252.0));

  // large n stays exact thanks to per-step reduction
  CHECK(pass_at_k_rational(200, 100, 1) == R{1, 2});

  CHECK_THROWS_AS(pass_at_k_rational(0, 0, 1), PipelineError);
  CHECK_THROWS_AS(pass_at_k_rational(10, -1, 1), PipelineError);
  CHECK_THROWS_AS(pass_at_k_rational(10, 11, 1), PipelineError);
  CHECK_THROWS_AS(pass_at_k_rational(10, 5, 0), PipelineError);
  CHECK_THROWS_AS(pass_at_k_rational(10, 5, 11), PipelineError);
}

TEST_CASE("evaluate_backend rates an alternating backend and round-trips csv") {
  TpuConfig cfg = small_cfg();
  DesignSpec spec = config_to_spec(cfg);
  StoreIndex store = full_store(emit_project(cfg));

  LlmBackend b = stub_backend({LlmFault::Ok, LlmFault::TruncateOutput});
  EvalTable t = evaluate_backend({spec}, b, store, 10, {1, 5});
  REQUIRE(t.rows.size() == 8);

  // 5 of 10 attempts survive both checks
  for (const auto& r : t.rows) {
    double want = r.k == 1 ? 0.5 : 251.0 / 252.0;
    CHECK(r.pass_rate == doctest::Approx(want));
  }
  CHECK(t.rows[0].spec_id == "spec0");
  CHECK(t.rows[0].check == "module");
  CHECK(t.rows[1].check == "integration");
  CHECK(t.rows[4].spec_id == "aggregate");
  CHECK(t.rows[7].spec_id == "aggregate");

  std::string csv = eval_to_csv(t);
  CHECK(csv.find("spec_id,check,k,pass_rate\n") == 0);
  CHECK(csv.find("spec0,module,1,0.500000") != std::string::npos);
  CHECK(eval_to_csv(eval_from_csv(csv)) == csv);
  CHECK_THROWS_AS(eval_from_csv("nope\n"), PipelineError);

  LlmBackend b2 = stub_backend({LlmFault::Ok});
  CHECK_THROWS_AS(evaluate_backend({spec}, b2, store, 4, {}), PipelineError);
  LlmBackend b3 = stub_backend({LlmFault::Ok});
  CHECK_THROWS_AS(evaluate_backend({spec}, b3, store, 4, {5}), PipelineError);
}

TEST_CASE("full-project evaluation cross-checks arithmetic units via the walker") {
  // the exact project carries standalone mul_/add_ records, so the module
  // check sweeps real netlists against their behavioral rules
  TpuConfig cfg = small_cfg();
  DesignSpec spec = config_to_spec(cfg);
  VerilogProject proj = emit_project(cfg);
  bool has_mult = false, has_add = false;
  for (const auto& m : proj.modules) {
    has_mult |= m.name == "mul_exact_w8";
    has_add |= m.name.rfind("add_exact_w", 0) == 0;
  }
  REQUIRE(has_mult);
  REQUIRE(has_add);

  LlmBackend b = stub_backend({LlmFault::Ok}, true);
  b.max_response_bytes = 1 << 22;
  EvalTable t = evaluate_backend({spec}, b, full_store(proj), 2, {1});
  REQUIRE(t.rows.size() == 4);
  for (const auto& r : t.rows) CHECK(r.pass_rate == doctest::Approx(1.0));
}

TEST_CASE("http backend reports transport errors and reads the environment") {
  LlmBackend dead;
  dead.kind = "http_endpoint";
  dead.endpoint = "http://127.0.0.1:1/complete";
  dead.timeout_s = 2;
  try {
    llm_complete(dead, "hello");
    CHECK(false);
  } catch (const LlmError& e) {
    CHECK(e.kind == "transport");
  }
  CHECK(dead.calls == 1);

  LlmBackend bad;
  bad.kind = "http_endpoint";
  bad.endpoint = "127.0.0.1:1/complete";
  CHECK_THROWS_AS(llm_complete(bad, "x"), LlmError);

  LlmBackend weird;
  weird.kind = "carrier_pigeon";
  CHECK_THROWS_AS(llm_complete(weird, "x"), PipelineError);

  unsetenv("TPUGEN_LLM_ENDPOINT");
  CHECK_THROWS_AS(http_backend_from_env(), PipelineError);
  setenv("TPUGEN_LLM_ENDPOINT", "http://127.0.0.1:9/v1/complete", 1);
  setenv("TPUGEN_LLM_TOKEN", "sekrit", 1);
  LlmBackend env = http_backend_from_env();
  CHECK(env.kind == "http_endpoint");
  CHECK(env.endpoint == "http://127.0.0.1:9/v1/complete");
  CHECK(env.auth_token == "sekrit");
  unsetenv("TPUGEN_LLM_ENDPOINT");
  unsetenv("TPUGEN_LLM_TOKEN");
}

TEST_CASE("http backend round-trips through a loopback server") {
  // modes: 0 fenced module, 1 oversized, 2 junk body, 3 http error,
  // 4 a unit whose netlist lies about its own arithmetic, 5 an honest one
  std::atomic<int> mode{0};
  httplib::Server svr;
  svr.Post("/complete", [&](const httplib::Request& req, httplib::Response& res) {
    if (req.get_header_value("Authorization") != "Bearer sekrit") {
      res.status = 401;
      return;
    }
    switch (mode.load()) {
      case 0:
        res.set_content(
            nlohmann::json{
                {"text", "```\nmodule corvid ();\n  wire w;\nendmodule\n```"}}
                .dump(),
            "application/json");
        break;
      case 1:
        res.set_content(
            nlohmann::json{{"text", std::string(20000, 'x')}}.dump(),
            "application/json");
        break;
      case 2:
        res.set_content("not json at all", "text/plain");
        break;
      case 3:
        res.status = 500;
        break;
      case 4:
        res.set_content(
            nlohmann::json{
                {"text",
                 "module mul_exact_w4 (\n  input wire [3:0] a,\n"
                 "  input wire [3:0] b,\n  output wire [7:0] y\n);\n"
                 "  assign y = a + b;\nendmodule\n"}}
                .dump(),
            "application/json");
        break;
      case 5:
        res.set_content(
            nlohmann::json{
                {"text",
                 "module mul_exact_w4 (\n  input wire [3:0] a,\n"
                 "  input wire [3:0] b,\n  output wire [7:0] y\n);\n"
                 "  assign y = a * b;\nendmodule\n"}}
                .dump(),
            "application/json");
        break;
    }
  });
  int port = svr.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&] { svr.listen_after_bind(); });
  struct Stop {
    httplib::Server& s;
    std::thread& t;
    ~Stop() {
      s.stop();
      t.join();
    }
  } stopper{svr, th};
  for (int i = 0; i < 200 && !svr.is_running(); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  REQUIRE(svr.is_running());

  LlmBackend b;
  b.kind = "http_endpoint";
  b.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/complete";
  b.auth_token = "sekrit";
  b.timeout_s = 5;

  std::string text = llm_complete(b, "one tiny module please");
  CHECK(text.find("module corvid") != std::string::npos);
  CHECK(records_from_text(text).at(0).name == "corvid");

  mode = 1;
  try {
    llm_complete(b, "x");
    CHECK(false);
  } catch (const LlmError& e) {
    CHECK(e.kind == "over_cap");
  }

  mode = 2;
  try {
    llm_complete(b, "x");
    CHECK(false);
  } catch (const LlmError& e) {
    CHECK(e.kind == "protocol");
  }

  mode = 3;
  try {
    llm_complete(b, "x");
    CHECK(false);
  } catch (const LlmError& e) {
    CHECK(e.kind == "transport");
    CHECK(std::string(e.what()).find("500") != std::string::npos);
  }

  LlmBackend wrong = b;
  wrong.auth_token = "guess";
  try {
    llm_complete(wrong, "x");
    CHECK(false);
  } catch (const LlmError& e) {
    CHECK(e.kind == "transport");
    CHECK(std::string(e.what()).find("401") != std::string::npos);
  }

  // the module-level check walks the netlist against the behavioral rule:
  // a mul_exact_w4 that adds scores zero on both checks, a correct one
  // passes the module check while integration still fails (wrong design)
  mode = 4;
  DesignSpec spec = config_to_spec(small_cfg());
  EvalTable t = evaluate_backend({spec}, b, empty_store(), 1, {1});
  REQUIRE(t.rows.size() == 4);
  for (const auto& r : t.rows) CHECK(r.pass_rate == doctest::Approx(0.0));

  mode = 5;
  EvalTable t2 = evaluate_backend({spec}, b, empty_store(), 1, {1});
  REQUIRE(t2.rows.size() == 4);
  for (const auto& r : t2.rows) {
    double want = r.check == "module" ? 1.0 : 0.0;
    CHECK(r.pass_rate == doctest::Approx(want));
  }
}
