#include "tpugen/dataset.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tpugen/arith.hpp"
#include "tpugen/design.hpp"
#include "tpugen/emitter.hpp"

namespace tpugen {
namespace {

namespace fs = std::filesystem;

// ---- mock ppa model ----
//
// Synthetic by construction (real numbers live behind the shell adapters),
// but deterministic and shaped to be useful: every area term scales with
// S^2 except the 2S shared conditioning units, so sharing amortizes with
// array size; widths only ever push metrics up.
constexpr double kMulArea = 5.5;    // um^2 per kind-weighted mult bit^2
constexpr double kAddArea = 9.0;    // um^2 per kind-weighted acc bit
constexpr double kParamArea = 3.0;  // um^2 per unit-parameter count
constexpr double kMemBitArea = 1.9; // um^2 per operand bit per cell
constexpr double kPauArea = 14.0;   // um^2 per conditioned operand bit
constexpr double kCpBaseNs = 0.35;  // register + wiring floor
constexpr double kGateNs = 0.046;   // per weighted gate level
constexpr double kDynPower = 0.00085;  // mW per um^2 per GHz
constexpr double kStatPower = 0.00011; // mW per um^2

const std::map<std::string, double>& mult_area_rho() {
  static const std::map<std::string, double> m = {
      {"exact", 1.00}, {"bam", 0.80},      {"alm_loa", 0.55},
      {"alm_maa3", 0.58}, {"alm_soa", 0.52}, {"asm", 0.65},
      {"dralm", 0.60}, {"roba", 0.62},     {"drum", 0.50},
      {"trunc", 0.72}};
  return m;
}

const std::map<std::string, double>& mult_depth_rho() {
  static const std::map<std::string, double> m = {
      {"exact", 1.00}, {"bam", 0.85},      {"alm_loa", 0.60},
      {"alm_maa3", 0.65}, {"alm_soa", 0.58}, {"asm", 0.70},
      {"dralm", 0.66}, {"roba", 0.68},     {"drum", 0.55},
      {"trunc", 0.80}};
  return m;
}

const std::map<std::string, double>& adder_area_rho() {
  static const std::map<std::string, double> m = {{"exact", 1.00},
                                                  {"loa", 0.75},
                                                  {"loa_nocarry", 0.66},
                                                  {"trunc", 0.60},
                                                  {"soa", 0.70}};
  return m;
}

const std::map<std::string, double>& adder_depth_rho() {
  static const std::map<std::string, double> m = {{"exact", 1.00},
                                                  {"loa", 0.70},
                                                  {"loa_nocarry", 0.60},
                                                  {"trunc", 0.55},
                                                  {"soa", 0.65}};
  return m;
}

double rho_of(const std::map<std::string, double>& table,
              const std::string& kind, const char* what) {
  auto it = table.find(kind);
  if (it == table.end())
    throw DatasetError(std::string("no mock ppa ") + what +
                       " constant for kind '" + kind + "'");
  return it->second;
}

double param_sum(const std::vector<u64>& params) {
  double s = 0;
  for (u64 p : params) s += static_cast<double>(p);
  return s;
}

TpuConfig config_of(const VerilogProject& proj) {
  try {
    return extract_config_from_top(proj.top);
  } catch (const HeaderError& e) {
    throw DatasetError(std::string("project has no usable config header: ") +
                       e.what());
  }
}

PpaMetrics mock_ppa(const VerilogProject& proj, u64) {
  TpuConfig cfg = config_of(proj);
  int wm = mult_width(cfg.dw, cfg.ww);
  double s = cfg.s;
  double a_mult = kMulArea * rho_of(mult_area_rho(), cfg.mult.kind, "area") *
                      wm * wm +
                  kParamArea * param_sum(cfg.mult.params);
  double a_add = kAddArea * rho_of(adder_area_rho(), cfg.adder.kind, "area") *
                     cfg.acc_width +
                 kParamArea * param_sum(cfg.adder.params);
  double a_mem = kMemBitArea * (cfg.dw + cfg.ww);
  double a_pau =
      has_identity_conditioning(cfg.mult) ? 0.0 : kPauArea * wm;

  PpaMetrics m;
  m.area_um2 = s * s * (a_mult + a_add + a_mem) + 2 * s * a_pau;
  double levels =
      rho_of(mult_depth_rho(), cfg.mult.kind, "depth") * 2.0 * wm +
      rho_of(adder_depth_rho(), cfg.adder.kind, "depth") * cfg.acc_width;
  m.critical_path_ns = kCpBaseNs + kGateNs * levels;
  double f_ghz = 1.0 / cfg.clock_period_ns;
  m.power_mw = (kDynPower * f_ghz + kStatPower) * m.area_um2;
  return m;
}

// ---- shell adapters ----

struct TempDir {
  fs::path dir;
  explicit TempDir(const std::string& stem) {
    static std::atomic<u64> counter{0};
    dir = fs::temp_directory_path() /
          (stem + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
    fs::create_directories(dir);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
};

double parse_report_number(const std::string& line, const std::string& key) {
  std::string v = trim(line.substr(key.size()));
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size() || !(d >= 0)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw DatasetError("report unparseable: bad value for " + key + " '" + v +
                       "'");
  }
}

PpaMetrics run_tool(const std::string& cmd, const VerilogProject& proj) {
  TempDir work("tpugen-ppa");
  write_project(proj, work.dir.string());
  std::string full = cmd + " " + work.dir.string() + " 2>&1";
  FILE* p = ::popen(full.c_str(), "r");
  if (!p) throw DatasetError("cannot launch ppa tool: " + cmd);
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  int status = ::pclose(p);
  if (status != 0)
    throw DatasetError("ppa tool exited with status " +
                       std::to_string(status) + ": " + cmd);

  std::istringstream is(out);
  std::string line;
  if (!std::getline(is, line) || trim(line) != "PPA_REPORT v1")
    throw DatasetError("report grammar v1 expected, got '" +
                       (line.size() > 60 ? line.substr(0, 60) : line) + "'");
  PpaMetrics m;
  bool have_area = false, have_cp = false, have_power = false;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.rfind("TOOL:", 0) == 0) {
      m.tool = trim(line.substr(5));
    } else if (line.rfind("CELL_AREA_UM2:", 0) == 0) {
      m.area_um2 = parse_report_number(line, "CELL_AREA_UM2:");
      have_area = true;
    } else if (line.rfind("CRITICAL_PATH_NS:", 0) == 0) {
      m.critical_path_ns = parse_report_number(line, "CRITICAL_PATH_NS:");
      have_cp = true;
    } else if (line.rfind("POWER_MW:", 0) == 0) {
      m.power_mw = parse_report_number(line, "POWER_MW:");
      have_power = true;
    }
  }
  if (!have_area) throw DatasetError("report unparseable: missing CELL_AREA_UM2");
  if (!have_cp)
    throw DatasetError("report unparseable: missing CRITICAL_PATH_NS");
  if (!have_power) throw DatasetError("report unparseable: missing POWER_MW");
  return m;
}

PpaAdapter shell_adapter(const std::string& name, const char* env_var) {
  const char* cmd = std::getenv(env_var);
  if (!cmd || !*cmd) throw AdapterUnavailable(name);
  PpaAdapter a;
  a.name = name;
  a.version = "v1-report";
  std::string c = cmd;
  a.run = [c, name](const VerilogProject& proj, u64) {
    PpaMetrics m = run_tool(c, proj);
    m.tool = name + " " + (m.tool.empty() ? "unversioned" : m.tool);
    return m;
  };
  return a;
}

// ---- grid ----

std::vector<int> mult_widths_of(const GridSpec& g) {
  std::set<int> ws;
  for (int dw : g.dws)
    for (int ww : g.wws) ws.insert(mult_width(dw, ww));
  return {ws.begin(), ws.end()};
}

std::vector<int> acc_widths_of(const GridSpec& g) {
  std::set<int> ws;
  for (int dw : g.dws)
    for (int ww : g.wws) ws.insert(default_acc_width(dw, ww));
  return {ws.begin(), ws.end()};
}

// ---- record helpers ----

std::string now_utc() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string module_summary(const std::string& name, const TpuConfig& cfg) {
  int wm = mult_width(cfg.dw, cfg.ww);
  if (name.rfind("add_", 0) == 0)
    return adder_description(cfg.adder, cfg.acc_width);
  if (name.rfind("mul_", 0) == 0) return mult_description(cfg.mult, wm);
  if (name.rfind("pau_", 0) == 0) return pau_description(cfg.mult, wm);
  if (name.rfind("ape_", 0) == 0)
    return "multiply-accumulate cell folding the conditioned product into a " +
           std::to_string(cfg.acc_width) + "-bit running sum";
  if (name.rfind("controller_", 0) == 0)
    return "sequencer for weight load, up to " + std::to_string(cfg.k_max) +
           " accumulation steps, and column-serial drain";
  if (name.rfind("fifo_", 0) == 0)
    return "skew fifo aligning the streamed operand diagonals";
  if (name.rfind("ifmap_mem", 0) == 0)
    return "activation buffer, " + std::to_string(cfg.dw) + "-bit words";
  if (name.rfind("weight_mem", 0) == 0)
    return "weight buffer, " + std::to_string(cfg.ww) + "-bit words";
  if (name.rfind("tpu_", 0) == 0)
    return "output-stationary systolic array top, " + std::to_string(cfg.s) +
           "x" + std::to_string(cfg.s) + " cells";
  return "module " + name;
}

ErrorReport error_report_from_json(const nlohmann::json& j) {
  ErrorReport r;
  r.med = j.at("med").get<double>();
  r.nmed = j.at("nmed").get<double>();
  r.mred = j.at("mred").get<double>();
  r.max_ed = j.at("max_ed").get<u64>();
  r.error_rate = j.at("error_rate").get<double>();
  r.n_evaluated = j.at("n_evaluated").get<u64>();
  r.mode = j.at("mode").get<std::string>();
  r.seed = j.at("seed").get<u64>();
  r.n_mred_pairs = j.at("n_mred_pairs").get<u64>();
  return r;
}

std::string record_id(const TpuConfig& cfg, const std::string& top_digest) {
  return digest_hex("dataset-record\n" + config_to_json(cfg).dump() + "\n" +
                    top_digest);
}

}  // namespace

nlohmann::json ppa_to_json(const PpaMetrics& m) {
  return {{"area_um2", m.area_um2},
          {"power_mw", m.power_mw},
          {"critical_path_ns", m.critical_path_ns},
          {"latency_ms", m.latency_ms},
          {"tool", m.tool}};
}

PpaMetrics ppa_from_json(const nlohmann::json& j) {
  PpaMetrics m;
  m.area_um2 = j.at("area_um2").get<double>();
  m.power_mw = j.at("power_mw").get<double>();
  m.critical_path_ns = j.at("critical_path_ns").get<double>();
  m.latency_ms = j.at("latency_ms").get<double>();
  m.tool = j.at("tool").get<std::string>();
  return m;
}

GridSpec canonical_grid(const GridSpec& grid) {
  GridSpec g = grid;
  auto dedup_sort = [](std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedup_sort(g.sizes);
  dedup_sort(g.dws);
  dedup_sort(g.wws);
  auto dedup_keep = [](std::vector<std::string>& v) {
    std::set<std::string> seen;
    std::vector<std::string> out;
    for (auto& t : v)
      if (seen.insert(t).second) out.push_back(t);
    v = std::move(out);
  };
  dedup_keep(g.mults);
  dedup_keep(g.adders);

  if (g.sizes.empty()) throw DatasetError("empty axis: sizes");
  if (g.dws.empty()) throw DatasetError("empty axis: dws");
  if (g.wws.empty()) throw DatasetError("empty axis: wws");
  if (g.mults.empty()) throw DatasetError("empty axis: mults");
  if (g.adders.empty()) throw DatasetError("empty axis: adders");

  for (int s : g.sizes) {
    bool ok = false;
    for (int k : kSupportedSizes) ok |= (s == k);
    if (!ok)
      throw DatasetError("array size " + std::to_string(s) + " unsupported");
  }
  for (int d : g.dws) {
    bool ok = false;
    for (int k : kSupportedDws) ok |= (d == k);
    if (!ok)
      throw DatasetError("data width " + std::to_string(d) + " unsupported");
  }
  for (int w : g.wws)
    if (w < kMinWw || w > kMaxWw)
      throw DatasetError("weight width " + std::to_string(w) + " out of range");

  for (const auto& t : g.mults)
    for (int w : mult_widths_of(g)) {
      try {
        parse_mult_text(t, w);
      } catch (const std::exception& e) {
        throw DatasetError("multiplier '" + t + "' does not resolve at width " +
                           std::to_string(w) + ": " + e.what());
      }
    }
  for (const auto& t : g.adders)
    for (int w : acc_widths_of(g)) {
      try {
        parse_adder_text(t, w);
      } catch (const std::exception& e) {
        throw DatasetError("adder '" + t + "' does not resolve at width " +
                           std::to_string(w) + ": " + e.what());
      }
    }
  return g;
}

u64 grid_size(const GridSpec& grid) {
  GridSpec g = canonical_grid(grid);
  return u64(g.sizes.size()) * g.dws.size() * g.wws.size() * g.mults.size() *
         g.adders.size();
}

TpuConfig grid_config_at(const GridSpec& grid, u64 i) {
  GridSpec g = canonical_grid(grid);
  u64 n = u64(g.sizes.size()) * g.dws.size() * g.wws.size() * g.mults.size() *
          g.adders.size();
  if (i >= n)
    throw DatasetError("grid index " + std::to_string(i) +
                       " out of range (size " + std::to_string(n) + ")");
  u64 ai = i % g.adders.size();
  i /= g.adders.size();
  u64 mi = i % g.mults.size();
  i /= g.mults.size();
  u64 wi = i % g.wws.size();
  i /= g.wws.size();
  u64 di = i % g.dws.size();
  i /= g.dws.size();
  u64 si = i;

  int s = g.sizes[si], dw = g.dws[di], ww = g.wws[wi];
  MultUnit mu = parse_mult_text(g.mults[mi], mult_width(dw, ww));
  AdderUnit au = parse_adder_text(g.adders[ai], default_acc_width(dw, ww));
  return default_config(s, dw, ww, mu, au);
}

std::vector<TpuConfig> enumerate_grid(const GridSpec& grid, u64 begin,
                                      u64 count) {
  GridSpec g = canonical_grid(grid);
  u64 n = u64(g.sizes.size()) * g.dws.size() * g.wws.size() * g.mults.size() *
          g.adders.size();
  std::vector<TpuConfig> out;
  for (u64 i = begin; i < n && out.size() < count; ++i)
    out.push_back(grid_config_at(g, i));
  return out;
}

nlohmann::json grid_to_json(const GridSpec& grid) {
  return {{"sizes", grid.sizes},
          {"dws", grid.dws},
          {"wws", grid.wws},
          {"mults", grid.mults},
          {"adders", grid.adders}};
}

GridSpec grid_from_json(const nlohmann::json& j) {
  try {
    GridSpec g;
    g.sizes = j.at("sizes").get<std::vector<int>>();
    g.dws = j.at("dws").get<std::vector<int>>();
    g.wws = j.at("wws").get<std::vector<int>>();
    g.mults = j.at("mults").get<std::vector<std::string>>();
    g.adders = j.at("adders").get<std::vector<std::string>>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("bad grid json: ") + e.what());
  }
}

PpaAdapter mock_ppa_adapter() {
  PpaAdapter a;
  a.name = "mock";
  a.version = "1";
  a.run = mock_ppa;
  return a;
}

PpaAdapter synth_ppa_adapter() {
  return shell_adapter("synth_tool", "TPUGEN_SYNTH_CMD");
}

PpaAdapter pnr_ppa_adapter() {
  return shell_adapter("pnr_tool", "TPUGEN_PNR_CMD");
}

PpaAdapter ppa_adapter_by_name(const std::string& name) {
  if (name == "mock") return mock_ppa_adapter();
  if (name == "synth_tool") return synth_ppa_adapter();
  if (name == "pnr_tool") return pnr_ppa_adapter();
  throw DatasetError("unknown ppa adapter '" + name + "'");
}

PpaMetrics run_ppa(const PpaAdapter& adapter, const VerilogProject& proj,
                   u64 workload_k) {
  if (workload_k < 1) throw DatasetError("workload K must be positive");
  if (workload_k > u64(1) << 31)
    throw DatasetError("workload K too large");
  if (!adapter.run) throw DatasetError("adapter '" + adapter.name +
                                       "' has no run hook");
  PpaMetrics m = adapter.run(proj, workload_k);
  if (m.tool.empty()) m.tool = adapter.name + " " + adapter.version;
  TpuConfig cfg = config_of(proj);
  m.latency_ms = double(os_cycle_count(cfg.s, static_cast<int>(workload_k))) *
                 cfg.clock_period_ns * 1e-6;
  if (!(m.area_um2 >= 0) || !(m.power_mw >= 0) ||
      !(m.critical_path_ns >= 0) || !(m.latency_ms >= 0))
    throw DatasetError("adapter '" + adapter.name +
                       "' produced a negative metric");
  return m;
}

RejectedConfig::RejectedConfig(const TpuConfig& c, const ValidationReport& r)
    : DatasetError("config rejected: " +
                   (r.reasons.empty()
                        ? std::string("invalid project")
                        : reason_kind_name(r.reasons.front().kind) + ": " +
                              r.reasons.front().detail)),
      config(c),
      report(r) {}

DatasetRecord build_record(const TpuConfig& cfg, const StoreIndex& store,
                           const PpaAdapter& adapter,
                           const BuildOptions& opts) {
  VerilogProject proj = emit_project(cfg);
  DesignSpec spec = config_to_spec(cfg);
  ValidationReport rep = validate(proj, spec, store);
  if (!rep.valid) throw RejectedConfig(cfg, rep);

  DatasetRecord r;
  r.config = cfg;
  r.top_digest = digest_hex(proj.top.source);
  r.id = record_id(cfg, r.top_digest);
  r.high_level = render_prompt(spec);
  for (const auto& m : proj.modules) {
    ModuleNote note;
    note.name = m.name;
    note.summary = module_summary(m.name, cfg);
    note.source_ref =
        m.name == proj.top.name ? "top.v" : "rtl/" + m.name + ".v";
    r.blocks.push_back(std::move(note));
    r.code_modules.push_back(m.name);
  }
  r.ppa = run_ppa(adapter, proj, opts.workload_k);
  int wm = mult_width(cfg.dw, cfg.ww);
  r.unit_error = wm <= 8 ? exhaustive_report(cfg.mult, wm)
                         : sampled_report(cfg.mult, wm, opts.error_samples,
                                          opts.seed);
  r.workload_k = opts.workload_k;
  r.seed = opts.seed;
  r.adapter = r.ppa.tool;
  r.timestamp = opts.timestamp.empty() ? now_utc() : opts.timestamp;
  return r;
}

nlohmann::json record_to_json(const DatasetRecord& r) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : r.blocks)
    blocks.push_back({{"module", b.name},
                      {"summary", b.summary},
                      {"ref", b.source_ref}});
  nlohmann::json j;
  j["id"] = r.id;
  j["config"] = config_to_json(r.config);
  j["description"] = {{"high_level", r.high_level}, {"blocks", blocks}};
  j["code"] = {{"modules", r.code_modules}, {"top_digest", r.top_digest}};
  j["ppa"] = ppa_to_json(r.ppa);
  j["error"] = report_to_json(r.unit_error);
  j["provenance"] = {{"workload_k", r.workload_k},
                     {"seed", r.seed},
                     {"adapter", r.adapter},
                     {"timestamp", r.timestamp}};
  return j;
}

DatasetRecord record_from_json(const nlohmann::json& j) {
  try {
    DatasetRecord r;
    r.id = j.at("id").get<std::string>();
    r.config = config_from_json(j.at("config"));
    r.high_level = j.at("description").at("high_level").get<std::string>();
    for (const auto& b : j.at("description").at("blocks")) {
      ModuleNote note;
      note.name = b.at("module").get<std::string>();
      note.summary = b.at("summary").get<std::string>();
      note.source_ref = b.at("ref").get<std::string>();
      r.blocks.push_back(std::move(note));
    }
    r.code_modules = j.at("code").at("modules").get<std::vector<std::string>>();
    r.top_digest = j.at("code").at("top_digest").get<std::string>();
    r.ppa = ppa_from_json(j.at("ppa"));
    r.unit_error = error_report_from_json(j.at("error"));
    r.workload_k = j.at("provenance").at("workload_k").get<u64>();
    r.seed = j.at("provenance").at("seed").get<u64>();
    r.adapter = j.at("provenance").at("adapter").get<std::string>();
    r.timestamp = j.at("provenance").at("timestamp").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("bad record json: ") + e.what());
  }
}

nlohmann::json rejection_to_json(const TpuConfig& cfg,
                                 const ValidationReport& report) {
  return {{"config", config_to_json(cfg)}, {"report", report_to_json(report)}};
}

void write_dataset(const std::vector<DatasetRecord>& records,
                   const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw DatasetError("cannot write '" + path + "'");
  for (const auto& r : records) os << record_to_json(r).dump() << "\n";
  if (!os) throw DatasetError("cannot write '" + path + "'");

  fs::path tops = p.parent_path() / (p.stem().string() + "_tops");
  fs::create_directories(tops);
  for (const auto& r : records) {
    std::string src = emit_top(r.config).source;
    if (digest_hex(src) != r.top_digest)
      throw DatasetError("record " + r.id +
                         ": stored top digest does not match the top "
                         "regenerated from its config");
    std::ofstream ts(tops / (r.id + ".v"), std::ios::binary);
    ts << src;
    if (!ts) throw DatasetError("cannot write top file for record " + r.id);
  }
}

std::vector<DatasetRecord> read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DatasetError("cannot open '" + path + "'");
  std::vector<DatasetRecord> out;
  std::string line;
  for (u64 ln = 1; std::getline(is, line); ++ln) {
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      out.push_back(record_from_json(j));
    } catch (const std::exception& e) {
      throw DatasetError("line " + std::to_string(ln) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace tpugen
