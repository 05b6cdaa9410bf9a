// tpugen: one binary wiring the whole toolchain together. Machine-readable
// results (JSON/JSONL/CSV) go to stdout, human summaries and the effective
// configuration banner to stderr. Exit codes: 0 success, 1 domain failure
// (invalid project, infeasible budget, failed generation), 2 usage error.

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "tpugen/arith.hpp"
#include "tpugen/config.hpp"
#include "tpugen/dataset.hpp"
#include "tpugen/design.hpp"
#include "tpugen/emitter.hpp"
#include "tpugen/metrics.hpp"
#include "tpugen/pipeline.hpp"
#include "tpugen/search.hpp"
#include "tpugen/simulator.hpp"
#include "tpugen/store.hpp"
#include "tpugen/validator.hpp"

using namespace tpugen;
using nlohmann::json;

namespace {

// flag-combination mistakes exit 2 like any other usage error
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int g_log_level = 1;  // 0 quiet, 1 info, 2 debug

void info(const std::string& line) {
  if (g_log_level >= 1) std::cerr << line << "\n";
}

void debug(const std::string& line) {
  if (g_log_level >= 2) std::cerr << line << "\n";
}

// every run prints the flags it actually used, so stderr alone is enough
// to reproduce it
void banner(const std::string& sub, const json& eff) {
  info("tpugen " + sub + " " + eff.dump());
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void emit_json(const json& j) { std::cout << j.dump(2) << "\n"; }

DesignSpec spec_from_flags(const std::string& spec_text,
                           const std::string& spec_file) {
  if (spec_text.empty() == spec_file.empty())
    throw UsageError("give exactly one of --spec and --spec-file");
  std::string text = spec_text.empty() ? read_text_file(spec_file) : spec_text;
  return canonicalize(parse_spec(text));
}

std::vector<StoreEntry> entries_for(const VerilogProject& proj) {
  std::vector<StoreEntry> entries;
  for (const VerilogModule& m : proj.modules)
    entries.push_back({m, "systolic array building block " + m.name});
  return entries;
}

std::vector<LlmFault> faults_from_csv(const std::string& csv) {
  std::vector<LlmFault> plan;
  for (const std::string& part : split(csv, ','))
    plan.push_back(fault_from_name(trim(part)));
  if (plan.empty()) plan.push_back(LlmFault::Ok);
  return plan;
}

LlmBackend backend_from_flags(const std::string& kind,
                              const std::string& faults, bool full_project,
                              std::size_t cap) {
  LlmBackend b;
  if (kind == "stub")
    b = stub_backend(faults_from_csv(faults), full_project);
  else if (kind == "http")
    b = http_backend_from_env();
  else
    throw std::runtime_error("unknown backend '" + kind +
                             "' (expected stub or http)");
  b.max_response_bytes = cap;
  return b;
}

SearchWeights weights_from_text(const std::string& text) {
  SearchWeights w;
  if (trim(text).empty()) return w;
  for (const std::string& part : split(text, ',')) {
    std::string p = trim(part);
    std::size_t eq = p.find('=');
    if (eq == std::string::npos)
      throw SearchError("weight '" + p + "' is not key=value");
    std::string key = trim(p.substr(0, eq));
    double val = 0;
    try {
      std::size_t used = 0;
      val = std::stod(p.substr(eq + 1), &used);
      if (used != p.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw SearchError("bad weight value in '" + p + "'");
    }
    if (key == "power") w.power = val;
    else if (key == "area") w.area = val;
    else if (key == "latency") w.latency = val;
    else throw SearchError("unknown weight '" + key + "'");
  }
  return w;
}

// ---- subcommand runners ----

int run_parse_spec(const std::string& spec_text, const std::string& spec_file) {
  DesignSpec spec = spec_from_flags(spec_text, spec_file);
  TpuConfig cfg = spec_to_config(spec);
  emit_json({{"spec", spec_to_json(spec)},
             {"config", config_to_json(cfg)},
             {"prompt", render_prompt(spec)}});
  info("parsed: " + config_key(cfg));
  return 0;
}

int run_gen(const std::string& spec_text, const std::string& spec_file,
            const std::string& out_dir, const std::string& backend_kind,
            const std::string& faults, bool full_project, bool no_rag,
            int max_iters, std::size_t cap) {
  DesignSpec spec = spec_from_flags(spec_text, spec_file);

  VerilogProject proj;
  json extra;
  if (backend_kind.empty()) {
    proj = emit_project(spec_to_config(spec));
    extra["mode"] = "emitter";
  } else {
    LlmBackend backend =
        backend_from_flags(backend_kind, faults, full_project || no_rag, cap);
    PipelineResult res;
    if (no_rag) {
      res = generate_without_rag(spec, backend, max_iters);
    } else {
      StoreIndex store = build_index(entries_for(emit_project(spec_to_config(spec))));
      res = generate(spec, backend, store, max_iters);
    }
    extra["mode"] = "pipeline";
    extra["iterations"] = res.iterations;
    if (!res.transcript.empty())
      extra["last_report"] = report_to_json(res.transcript.back().report);
    if (!res.valid) {
      extra["valid"] = false;
      emit_json(extra);
      info("generation failed after " + std::to_string(res.iterations) +
           " iteration(s)");
      return 1;
    }
    proj = *res.project;
    extra["valid"] = true;
  }

  extra["manifest"] = proj.manifest;
  emit_json(extra);
  if (!out_dir.empty()) {
    write_project(proj, out_dir);
    info("project written to " + out_dir);
  }
  info("generated " + proj.top.name + " with " +
       std::to_string(proj.modules.size()) + " modules");
  return 0;
}

int run_simulate(const std::string& spec_text, const std::string& spec_file,
                 int k, u64 seed) {
  DesignSpec spec = spec_from_flags(spec_text, spec_file);
  TpuConfig cfg = spec_to_config(spec);
  std::mt19937_64 rng(seed);
  Mat a(cfg.s, k), b(k, cfg.s);
  for (u64& v : a.data) v = draw_bits(rng, cfg.dw);
  for (u64& v : b.data) v = draw_bits(rng, cfg.ww);
  SimResult res = simulate(cfg, a, b);

  json c = json::array();
  for (int i = 0; i < cfg.s; ++i) {
    json row = json::array();
    for (int j = 0; j < cfg.s; ++j) row.push_back(res.c.at(i, j));
    c.push_back(row);
  }
  std::string flat;
  for (u64 v : res.c.data) flat += std::to_string(v) + ",";
  emit_json({{"config", config_to_json(cfg)},
             {"k", k},
             {"seed", seed},
             {"cycles", res.cycles},
             {"any_overflow", res.any_overflow()},
             {"c", c},
             {"c_digest", digest_hex(flat)}});
  info("simulated " + std::to_string(cfg.s) + "x" + std::to_string(cfg.s) +
       " array for " + std::to_string(res.cycles) + " cycles");
  return 0;
}

int run_metrics(const std::string& mult_text, const std::string& adder_text,
                int width, const std::string& mode, u64 samples, u64 seed) {
  if (mult_text.empty() == adder_text.empty())
    throw UsageError("give exactly one of --mult and --adder");
  ErrorReport rep;
  if (!mult_text.empty()) {
    MultUnit u = parse_mult_text(mult_text, width);
    rep = mode == "exhaustive" ? exhaustive_report(u, width)
                               : sampled_report(u, width, samples, seed);
  } else {
    AdderUnit u = parse_adder_text(adder_text, width);
    rep = mode == "exhaustive" ? exhaustive_report(u, width)
                               : sampled_report(u, width, samples, seed);
  }
  emit_json(report_to_json(rep));
  info("evaluated " + std::to_string(rep.n_evaluated) + " pairs, mode " +
       rep.mode);
  return 0;
}

int run_retrieve(const std::string& project_dir, const std::string& store_dir,
                 const std::string& query, int top) {
  if (project_dir.empty() == store_dir.empty())
    throw UsageError("give exactly one of --project and --store");
  StoreIndex idx = project_dir.empty()
                       ? load_store(store_dir)
                       : build_index(entries_for(read_project(project_dir)));
  std::vector<RankedModule> hits = retrieve_by_text(idx, query, top);
  json out = json::array();
  for (const RankedModule& h : hits)
    out.push_back({{"name", h.name},
                   {"score", h.score},
                   {"dot", h.dot},
                   {"doc_norm2", h.doc_norm2}});
  emit_json(out);
  info(std::to_string(hits.size()) + " of " + std::to_string(idx.size()) +
       " modules matched");
  return 0;
}

int run_validate(const std::string& project_dir, const std::string& spec_text,
                 const std::string& spec_file) {
  VerilogProject proj = read_project(project_dir);
  DesignSpec spec;
  if (spec_text.empty() && spec_file.empty())
    spec = config_to_spec(extract_config_from_top(proj.top));
  else
    spec = spec_from_flags(spec_text, spec_file);
  ValidationReport rep = validate(proj, spec, build_index({}));
  emit_json(report_to_json(rep));
  if (rep.valid) {
    info("valid");
    return 0;
  }
  info("invalid: " + std::to_string(rep.reasons.size()) + " reason(s)");
  return 1;
}

int run_dataset_build(const std::string& grid_file, const std::string& ppa,
                      const std::string& out_file, u64 workload, u64 samples,
                      u64 seed, u64 begin, u64 count, int jobs,
                      std::string timestamp) {
  GridSpec grid = grid_from_json(json::parse(read_text_file(grid_file)));
  std::vector<TpuConfig> cfgs = enumerate_grid(grid, begin, count);
  if (cfgs.empty()) throw DatasetError("grid slice is empty");

  PpaAdapter adapter = ppa_adapter_by_name(ppa);
  BuildOptions opts;
  opts.workload_k = workload;
  opts.error_samples = samples;
  opts.seed = seed;
  if (timestamp.empty()) {
    BuildOptions probe;  // stamp once so every record in the run agrees
    DatasetRecord first = build_record(cfgs[0], build_index({}), adapter, probe);
    timestamp = first.timestamp;
  }
  opts.timestamp = timestamp;

  StoreIndex empty = build_index({});
  std::vector<std::optional<DatasetRecord>> slots(cfgs.size());
  std::vector<std::optional<json>> rejected(cfgs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cfgs.size()) return;
      try {
        slots[i] = build_record(cfgs[i], empty, adapter, opts);
      } catch (const RejectedConfig& rc) {
        rejected[i] = rejection_to_json(rc.config, rc.report);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  int n_threads = std::max(1, jobs);
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  std::vector<DatasetRecord> records;
  json rejections = json::array();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]) records.push_back(*slots[i]);
    if (rejected[i]) rejections.push_back(*rejected[i]);
  }
  write_dataset(records, out_file);
  if (!rejections.empty()) {
    std::filesystem::path p(out_file);
    std::filesystem::path rej =
        p.parent_path() / (p.stem().string() + "_rejected.jsonl");
    std::ofstream os(rej, std::ios::binary);
    for (const json& r : rejections) os << r.dump() << "\n";
  }
  emit_json({{"records", records.size()},
             {"rejected", rejections.size()},
             {"grid_size", grid_size(grid)},
             {"out", out_file},
             {"timestamp", timestamp}});
  info("built " + std::to_string(records.size()) + " records (" +
       std::to_string(rejections.size()) + " rejected) -> " + out_file);
  return 0;
}

int run_search(const std::string& dataset_file, const std::string& grid_file,
               const std::string& ppa, u64 workload,
               const std::string& budget_text, const std::string& objective_name_,
               const std::string& weights_text) {
  if (dataset_file.empty() == grid_file.empty())
    throw UsageError("give exactly one of --dataset and --grid");
  std::vector<SearchEntry> entries;
  if (!dataset_file.empty()) {
    entries = entries_from_records(read_dataset(dataset_file));
  } else {
    GridSpec grid = grid_from_json(json::parse(read_text_file(grid_file)));
    entries = entries_from_grid(grid, ppa_adapter_by_name(ppa), workload);
  }
  Budget budget = budget_from_text(budget_text);
  Objective objective = objective_from_name(objective_name_);
  SearchWeights weights = weights_from_text(weights_text);
  SearchOutcome out = search(entries, budget, objective, weights);
  emit_json(outcome_to_json(out, budget, objective));
  info(std::string(out.feasible ? "feasible" : "infeasible") + ", " +
       std::to_string(out.feasible_count) + "/" +
       std::to_string(entries.size()) + " entries in budget");
  return out.feasible ? 0 : 1;
}

int run_eval(const std::string& backend_kind, const std::string& faults,
             bool full_project, int n_attempts, const std::string& ks_text,
             const std::string& grid_file, u64 sample, u64 seed, int jobs,
             std::size_t cap) {
  std::vector<int> ks;
  for (const std::string& part : split(ks_text, ','))
    ks.push_back(std::stoi(trim(part)));

  std::vector<DesignSpec> specs;
  if (grid_file.empty()) {
    // small built-in batch: exact and approximate flavors at two sizes
    for (const char* text :
         {"4x4 tpu, 8-bit data, 8-bit weights, exact multiplier, exact adder",
          "4x4 tpu, 8-bit data, 8-bit weights, drum multiplier k=4, loa adder "
          "m=4",
          "8x8 tpu, 8-bit data, 8-bit weights, exact multiplier, exact adder"}) {
      specs.push_back(canonicalize(parse_spec(text)));
    }
  } else {
    GridSpec grid = grid_from_json(json::parse(read_text_file(grid_file)));
    u64 n = grid_size(grid);
    std::vector<u64> picks;
    if (sample == 0 || sample >= n) {
      for (u64 i = 0; i < n; ++i) picks.push_back(i);
    } else {
      std::mt19937_64 rng(seed);
      std::vector<u64> all(n);
      for (u64 i = 0; i < n; ++i) all[i] = i;
      for (u64 i = 0; i < sample; ++i) {
        u64 j = i + draw_below(rng, n - i);
        std::swap(all[i], all[j]);
        picks.push_back(all[i]);
      }
    }
    for (u64 i : picks) specs.push_back(config_to_spec(grid_config_at(grid, i)));
  }
  for (std::size_t i = 0; i < specs.size(); ++i)
    specs[i].label = "spec" + std::to_string(i);

  // each spec gets a fresh backend and its own store, so results are
  // independent of scheduling and identical for every --jobs value
  std::vector<EvalTable> per_spec(specs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      try {
        LlmBackend backend =
            backend_from_flags(backend_kind, faults, full_project, cap);
        StoreIndex store = build_index(
            entries_for(emit_project(spec_to_config(specs[i]))));
        per_spec[i] =
            evaluate_backend({specs[i]}, backend, store, n_attempts, ks);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  EvalTable merged;
  for (const EvalTable& t : per_spec)
    for (const EvalRow& row : t.rows)
      if (row.spec_id != "aggregate") merged.rows.push_back(row);
  for (int k : ks) {
    for (const std::string& check : {std::string("module"),
                                     std::string("integration")}) {
      double sum = 0;
      u64 n = 0;
      for (const EvalTable& t : per_spec)
        for (const EvalRow& row : t.rows)
          if (row.spec_id != "aggregate" && row.check == check && row.k == k) {
            sum += row.pass_rate;
            ++n;
          }
      merged.rows.push_back({"aggregate", check, k, n ? sum / n : 0.0});
    }
  }
  std::cout << eval_to_csv(merged);
  info("evaluated " + std::to_string(specs.size()) + " specs x " +
       std::to_string(n_attempts) + " attempts");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spec-to-RTL toolchain for exact and approximate systolic-array "
               "TPUs",
               "tpugen"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "print help for every subcommand");
  app.set_config("--config", "", "read defaults from an ini/toml file");
  u64 seed = 1;
  std::string log_level = "info";
  app.add_option("--seed", seed, "seed for every random draw in the run");
  app.add_option("--log-level", log_level, "stderr verbosity")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));

  // parse-spec
  std::string ps_spec, ps_file;
  CLI::App* ps = app.add_subcommand(
      "parse-spec", "parse a prose design description into spec + config json");
  ps->add_option("--spec", ps_spec, "design description text");
  ps->add_option("--spec-file", ps_file, "file holding the description");

  // gen
  std::string gen_spec, gen_file, gen_out, gen_backend, gen_faults = "ok";
  bool gen_full = false, gen_norag = false;
  int gen_iters = 3;
  u64 gen_cap = 262144;
  CLI::App* gen = app.add_subcommand(
      "gen", "generate a project from a description, directly or via a backend");
  gen->add_option("--spec", gen_spec, "design description text");
  gen->add_option("--spec-file", gen_file, "file holding the description");
  gen->add_option("--out", gen_out, "directory to write top.v/rtl/manifest");
  gen->add_option("--backend", gen_backend,
                  "run the generation loop against stub or http instead of "
                  "the direct emitter");
  gen->add_option("--faults", gen_faults,
                  "stub fault plan, comma-separated, cycled per call");
  gen->add_flag("--full-project", gen_full,
                "stub returns the whole closure, not just the top");
  gen->add_flag("--no-rag", gen_norag,
                "skip retrieval; backend must produce the full project");
  gen->add_option("--max-iters", gen_iters, "repair loop bound");
  gen->add_option("--cap", gen_cap, "response byte cap for the backend");

  // simulate
  std::string sim_spec, sim_file;
  int sim_k = 16;
  CLI::App* sim = app.add_subcommand(
      "simulate", "run the behavioral array on seeded operands");
  sim->add_option("--spec", sim_spec, "design description text");
  sim->add_option("--spec-file", sim_file, "file holding the description");
  sim->add_option("--k", sim_k, "accumulation depth")->check(CLI::PositiveNumber);

  // metrics
  std::string met_mult, met_adder, met_mode = "exhaustive";
  int met_width = 8;
  u64 met_samples = 65536;
  CLI::App* met = app.add_subcommand(
      "metrics", "error statistics for one arithmetic unit");
  met->add_option("--mult", met_mult, "multiplier text, e.g. drum:k=8");
  met->add_option("--adder", met_adder, "adder text, e.g. loa:m=4");
  met->add_option("--width", met_width, "operand width in bits");
  met->add_option("--mode", met_mode, "exhaustive or sampled")
      ->check(CLI::IsMember({"exhaustive", "sampled"}));
  met->add_option("--samples", met_samples, "pair count in sampled mode");

  // retrieve
  std::string ret_project, ret_store, ret_query;
  int ret_top = 5;
  CLI::App* ret = app.add_subcommand(
      "retrieve", "rank stored modules against a text query");
  ret->add_option("--project", ret_project, "project directory to index");
  ret->add_option("--store", ret_store, "saved store directory");
  ret->add_option("--query", ret_query, "query text")->required();
  ret->add_option("--top", ret_top, "result count");

  // validate
  std::string val_project, val_spec, val_file;
  CLI::App* val = app.add_subcommand(
      "validate", "check a project directory, against a spec or its own header");
  val->add_option("--project", val_project, "project directory")->required();
  val->add_option("--spec", val_spec, "design description text");
  val->add_option("--spec-file", val_file, "file holding the description");

  // dataset build
  CLI::App* ds = app.add_subcommand("dataset", "dataset tooling");
  ds->require_subcommand(1);
  std::string dsb_grid, dsb_ppa = "mock", dsb_out = "dataset.jsonl";
  std::string dsb_timestamp;
  u64 dsb_workload = 64, dsb_samples = 65536, dsb_begin = 0, dsb_count = ~u64(0);
  int dsb_jobs = 1;
  CLI::App* dsb = ds->add_subcommand(
      "build", "build records for every config in a grid file");
  dsb->add_option("--grid", dsb_grid, "grid json file")->required();
  dsb->add_option("--ppa", dsb_ppa, "mock, synth_tool, or pnr_tool");
  dsb->add_option("--out", dsb_out, "output jsonl path");
  dsb->add_option("--workload", dsb_workload, "accumulation depth for latency");
  dsb->add_option("--samples", dsb_samples, "error sample count for wide units");
  dsb->add_option("--begin", dsb_begin, "first grid index of the slice");
  dsb->add_option("--count", dsb_count, "number of grid points to build");
  dsb->add_option("--jobs", dsb_jobs, "worker threads");
  dsb->add_option("--timestamp", dsb_timestamp,
                  "fixed provenance timestamp (default: stamped once at start)");

  // search
  std::string se_dataset, se_grid, se_ppa = "mock", se_budget, se_weights;
  std::string se_objective = "power";
  u64 se_workload = 64;
  CLI::App* se = app.add_subcommand(
      "search", "pick the best in-budget config from records or a grid");
  se->add_option("--dataset", se_dataset, "records jsonl file");
  se->add_option("--grid", se_grid, "grid json file scored with --ppa");
  se->add_option("--ppa", se_ppa, "adapter for grid mode");
  se->add_option("--workload", se_workload, "accumulation depth for latency");
  se->add_option("--budget", se_budget,
                 "e.g. power=100mW,area=0.25mm2,latency=48ms")
      ->required();
  se->add_option("--objective", se_objective,
                 "power, area, latency, or weighted");
  se->add_option("--weights", se_weights,
                 "weighted-objective weights, e.g. power=1,area=2");

  // eval
  std::string ev_backend = "stub", ev_faults = "ok", ev_grid, ev_ks = "1,5";
  bool ev_full = false;
  int ev_n = 10, ev_jobs = 1;
  u64 ev_sample = 0, ev_cap = 262144;
  CLI::App* ev = app.add_subcommand(
      "eval", "pass@k over a spec batch, one csv row per spec/check/k");
  ev->add_option("--backend", ev_backend, "stub or http");
  ev->add_option("--faults", ev_faults, "stub fault plan, cycled per call");
  ev->add_flag("--full-project", ev_full, "stub returns the whole closure");
  ev->add_option("--n", ev_n, "attempts per spec")->check(CLI::PositiveNumber);
  ev->add_option("--ks", ev_ks, "comma-separated k values");
  ev->add_option("--grid", ev_grid, "grid json file supplying the spec batch");
  ev->add_option("--sample", ev_sample,
                 "random grid subsample size (0 = whole grid)");
  ev->add_option("--jobs", ev_jobs, "worker threads");
  ev->add_option("--cap", ev_cap, "response byte cap for the backend");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  g_log_level = log_level == "quiet" ? 0 : log_level == "debug" ? 2 : 1;

  try {
    if (ps->parsed()) {
      banner("parse-spec", {{"seed", seed}});
      return run_parse_spec(ps_spec, ps_file);
    }
    if (gen->parsed()) {
      banner("gen", {{"backend", gen_backend.empty() ? "emitter" : gen_backend},
                     {"faults", gen_faults},
                     {"no_rag", gen_norag},
                     {"max_iters", gen_iters},
                     {"cap", gen_cap},
                     {"seed", seed}});
      return run_gen(gen_spec, gen_file, gen_out, gen_backend, gen_faults,
                     gen_full, gen_norag, gen_iters, gen_cap);
    }
    if (sim->parsed()) {
      banner("simulate", {{"k", sim_k}, {"seed", seed}});
      return run_simulate(sim_spec, sim_file, sim_k, seed);
    }
    if (met->parsed()) {
      banner("metrics", {{"mult", met_mult},
                         {"adder", met_adder},
                         {"width", met_width},
                         {"mode", met_mode},
                         {"samples", met_samples},
                         {"seed", seed}});
      return run_metrics(met_mult, met_adder, met_width, met_mode, met_samples,
                         seed);
    }
    if (ret->parsed()) {
      banner("retrieve", {{"query", ret_query}, {"top", ret_top}});
      return run_retrieve(ret_project, ret_store, ret_query, ret_top);
    }
    if (val->parsed()) {
      banner("validate", {{"project", val_project}});
      return run_validate(val_project, val_spec, val_file);
    }
    if (dsb->parsed()) {
      banner("dataset build", {{"grid", dsb_grid},
                               {"ppa", dsb_ppa},
                               {"workload", dsb_workload},
                               {"samples", dsb_samples},
                               {"begin", dsb_begin},
                               {"jobs", dsb_jobs},
                               {"seed", seed}});
      return run_dataset_build(dsb_grid, dsb_ppa, dsb_out, dsb_workload,
                               dsb_samples, seed, dsb_begin, dsb_count,
                               dsb_jobs, dsb_timestamp);
    }
    if (se->parsed()) {
      banner("search", {{"budget", se_budget},
                        {"objective", se_objective},
                        {"weights", se_weights},
                        {"workload", se_workload}});
      return run_search(se_dataset, se_grid, se_ppa, se_workload, se_budget,
                        se_objective, se_weights);
    }
    if (ev->parsed()) {
      banner("eval", {{"backend", ev_backend},
                      {"faults", ev_faults},
                      {"n", ev_n},
                      {"ks", ev_ks},
                      {"sample", ev_sample},
                      {"jobs", ev_jobs},
                      {"cap", ev_cap},
                      {"seed", seed}});
      return run_eval(ev_backend, ev_faults, ev_full, ev_n, ev_ks, ev_grid,
                      ev_sample, seed, ev_jobs, ev_cap);
    }
  } catch (const UsageError& e) {
    std::cerr << "tpugen: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "tpugen: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
