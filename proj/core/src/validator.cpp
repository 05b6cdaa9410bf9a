#include "tpugen/validator.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "tpugen/arith.hpp"
#include "tpugen/simulator.hpp"

namespace tpugen {
namespace {

std::string unit_text(const std::string& kind, const std::vector<u64>& params) {
  std::string s = kind;
  for (std::size_t i = 0; i < params.size(); ++i)
    s += (i ? "," : ":") + std::to_string(params[i]);
  return s;
}

}  // namespace

std::string reason_kind_name(ReasonKind k) {
  switch (k) {
    case ReasonKind::Unparseable: return "Unparseable";
    case ReasonKind::MissingModule: return "MissingModule";
    case ReasonKind::PortMismatch: return "PortMismatch";
    case ReasonKind::WidthMismatch: return "WidthMismatch";
    case ReasonKind::BadHeader: return "BadHeader";
    case ReasonKind::ConfigMismatch: return "ConfigMismatch";
    case ReasonKind::FunctionalMismatch: return "FunctionalMismatch";
  }
  return "?";
}

bool ValidationReport::has(ReasonKind k) const {
  return std::any_of(reasons.begin(), reasons.end(),
                     [&](const ValidationReason& r) { return r.kind == k; });
}

nlohmann::json report_to_json(const ValidationReport& r) {
  nlohmann::json j;
  j["verdict"] = r.valid ? "Valid" : "Invalid";
  j["checked_levels"] = r.checked_levels;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& x : r.reasons)
    arr.push_back({{"kind", reason_kind_name(x.kind)}, {"detail", x.detail}});
  j["reasons"] = arr;
  return j;
}

TpuConfig extract_config_from_top(const VerilogModule& top) {
  std::istringstream ss(top.source);
  std::string line;
  std::getline(ss, line);
  if (!std::getline(ss, line))
    throw HeaderError("top module '" + top.name + "' has no header line");
  const std::string tag = "// TPUGEN ";
  if (line.rfind(tag, 0) != 0)
    throw HeaderError("top module '" + top.name + "' carries no config header");
  auto j = nlohmann::json::parse(line.substr(tag.size()), nullptr, false);
  if (j.is_discarded())
    throw HeaderError("config header on '" + top.name + "' is not valid json");
  try {
    return config_from_json(j);
  } catch (const std::exception& e) {
    throw HeaderError(std::string("config header does not bind: ") + e.what());
  }
}

ValidationReport validate(const VerilogProject& project, const DesignSpec& spec,
                          const StoreIndex& store) {
  ValidationReport rep;
  auto fail = [&](ReasonKind k, std::string d) {
    rep.reasons.push_back({k, std::move(d)});
  };
  auto finish = [&]() -> ValidationReport& {
    rep.valid = rep.reasons.empty();
    return rep;
  };

  std::map<std::string, const VerilogModule*> local;
  for (const auto& m : project.modules) local.emplace(m.name, &m);
  local.emplace(project.top.name, &project.top);
  auto find_module = [&](const std::string& name) -> const VerilogModule* {
    auto it = local.find(name);
    if (it != local.end()) return it->second;
    auto st = store.by_name.find(name);
    return st == store.by_name.end() ? nullptr : &st->second.module;
  };

  rep.checked_levels.push_back("parse");
  std::map<std::string, VerilogModuleAst> asts;
  for (const auto& [name, m] : local) {
    try {
      bool found = false;
      for (auto& a : parse_verilog(m->source))
        if (a.name == name) {
          asts.emplace(name, std::move(a));
          found = true;
        }
      if (!found)
        fail(ReasonKind::Unparseable,
             "record '" + name + "' does not define a module of that name");
    } catch (const VerilogError& e) {
      fail(ReasonKind::Unparseable, "module '" + name + "': " + e.what());
    }
  }
  if (!rep.reasons.empty()) return finish();

  rep.checked_levels.push_back("closure");
  std::set<std::string> seen = {project.top.name};
  std::set<std::string> missing;
  std::vector<const VerilogModule*> members = {&project.top};
  std::vector<const VerilogModule*> work = {&project.top};
  while (!work.empty()) {
    const VerilogModule* m = work.back();
    work.pop_back();
    for (const auto& dep : m->deps) {
      if (!seen.insert(dep).second) continue;
      const VerilogModule* d = find_module(dep);
      if (!d) {
        missing.insert(dep);
        continue;
      }
      members.push_back(d);
      work.push_back(d);
    }
  }
  for (const auto& name : missing) fail(ReasonKind::MissingModule, name);
  if (!rep.reasons.empty()) return finish();

  rep.checked_levels.push_back("ports");
  for (const VerilogModule* m : members) {
    auto it = asts.find(m->name);
    if (it == asts.end()) {
      // a store-supplied member; parse on first use
      try {
        it = asts.emplace(m->name, parse_single_module(m->source)).first;
      } catch (const VerilogError& e) {
        fail(ReasonKind::Unparseable, "module '" + m->name + "': " + e.what());
        continue;
      }
    }
    const VerilogModuleAst& ast = it->second;
    for (const auto& inst : ast.insts) {
      if (is_verilog_primitive(inst.type_name)) continue;
      const VerilogModule* target = find_module(inst.type_name);
      if (!target) continue;  // reported at the closure level
      const auto& tports = target->ports;
      std::string where = m->name + "." + inst.inst_name;
      for (std::size_t ci = 0; ci < inst.conns.size(); ++ci) {
        const VConn& c = inst.conns[ci];
        const VPort* port = nullptr;
        if (!c.formal.empty()) {
          for (const auto& p : tports)
            if (p.name == c.formal) {
              port = &p;
              break;
            }
          if (!port) {
            fail(ReasonKind::PortMismatch, where + ": no port '" + c.formal +
                                               "' on " + inst.type_name);
            continue;
          }
        } else {
          if (ci >= tports.size()) {
            fail(ReasonKind::PortMismatch,
                 where + ": more connections than ports on " + inst.type_name);
            break;
          }
          port = &tports[ci];
        }
        if (!c.actual) continue;  // explicitly unconnected
        try {
          int aw = infer_width(ast, c.actual);
          if (aw != port->width)
            fail(ReasonKind::WidthMismatch,
                 where + "." + port->name + ": port is " +
                     std::to_string(port->width) + " bits, actual is " +
                     std::to_string(aw));
        } catch (const VerilogError& e) {
          fail(ReasonKind::WidthMismatch,
               where + "." + port->name + ": " + e.what());
        }
      }
    }
  }
  if (!rep.reasons.empty()) return finish();

  rep.checked_levels.push_back("header");
  TpuConfig cfg;
  try {
    cfg = extract_config_from_top(project.top);
  } catch (const HeaderError& e) {
    fail(ReasonKind::BadHeader, e.what());
    return finish();
  }
  if (auto prob = config_problem(cfg)) {
    fail(ReasonKind::ConfigMismatch, "header config unsupported: " + *prob);
    return finish();
  }
  TpuConfig want = spec_to_config(canonicalize(spec));
  if (!(cfg == want)) {
    std::string d = "header disagrees with spec:";
    auto diff = [&](const std::string& f, const std::string& got,
                    const std::string& exp) {
      d += " " + f + "=" + got + " (spec " + exp + ")";
    };
    if (cfg.s != want.s) diff("s", std::to_string(cfg.s), std::to_string(want.s));
    if (cfg.dw != want.dw)
      diff("dw", std::to_string(cfg.dw), std::to_string(want.dw));
    if (cfg.ww != want.ww)
      diff("ww", std::to_string(cfg.ww), std::to_string(want.ww));
    if (!(cfg.mult == want.mult))
      diff("mult", unit_text(cfg.mult.kind, cfg.mult.params),
           unit_text(want.mult.kind, want.mult.params));
    if (!(cfg.adder == want.adder))
      diff("adder", unit_text(cfg.adder.kind, cfg.adder.params),
           unit_text(want.adder.kind, want.adder.params));
    if (cfg.acc_width != want.acc_width)
      diff("acc_width", std::to_string(cfg.acc_width),
           std::to_string(want.acc_width));
    if (cfg.fifo_depth != want.fifo_depth)
      diff("fifo_depth", std::to_string(cfg.fifo_depth),
           std::to_string(want.fifo_depth));
    if (cfg.k_max != want.k_max)
      diff("k_max", std::to_string(cfg.k_max), std::to_string(want.k_max));
    if (cfg.clock_period_ns != want.clock_period_ns)
      diff("clock_period_ns", std::to_string(cfg.clock_period_ns),
           std::to_string(want.clock_period_ns));
    if (cfg.dataflow != want.dataflow)
      diff("dataflow", cfg.dataflow, want.dataflow);
    fail(ReasonKind::ConfigMismatch, d);
    return finish();
  }

  rep.checked_levels.push_back("functional");
  MacConfig mc{cfg.dw, cfg.ww, cfg.acc_width, cfg.mult, cfg.adder};
  for (int seed = 1; seed <= 3; ++seed) {
    int kk = seed == 1 ? 1 : seed == 2 ? cfg.s : 2 * cfg.s;
    if (kk > cfg.k_max) kk = cfg.k_max;
    std::mt19937_64 rng(u64(seed) * 0x9e3779b97f4a7c15ull + 1);
    Mat a(cfg.s, kk), b(kk, cfg.s);
    for (auto& v : a.data) v = rng() & mask_bits(cfg.dw);
    for (auto& v : b.data) v = rng() & mask_bits(cfg.ww);
    SimResult sim;
    try {
      sim = simulate(cfg, a, b);
    } catch (const SimError& e) {
      fail(ReasonKind::FunctionalMismatch,
           std::string("simulate failed: ") + e.what());
      continue;
    }
    if (sim.cycles != os_cycle_count(cfg.s, kk))
      fail(ReasonKind::FunctionalMismatch,
           "seed " + std::to_string(seed) + ": cycle count " +
               std::to_string(sim.cycles) + ", law says " +
               std::to_string(os_cycle_count(cfg.s, kk)));
    int listed = 0;
    for (int i = 0; i < cfg.s; ++i)
      for (int j = 0; j < cfg.s; ++j) {
        u64 acc = 0;
        for (int k = 0; k < kk; ++k)
          acc = mac_step(mc, acc, a.at(i, k), b.at(k, j)).value;
        if (acc != sim.c.at(i, j) && listed < 8) {
          ++listed;
          fail(ReasonKind::FunctionalMismatch,
               "seed " + std::to_string(seed) + " cell (" + std::to_string(i) +
                   "," + std::to_string(j) + "): simulator " +
                   std::to_string(sim.c.at(i, j)) + ", scalar fold " +
                   std::to_string(acc));
        }
      }
  }
  return finish();
}

}  // namespace tpugen
