#include "tpugen/search.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "tpugen/common.hpp"
#include "tpugen/emitter.hpp"

namespace tpugen {

namespace {

double parse_component(const std::string& key, const std::string& text) {
  struct Unit {
    const char* suffix;
    double scale;
  };
  // scales land on the Budget units: mW, mm^2, ms
  static const std::map<std::string, std::vector<Unit>> kUnits = {
      {"power", {{"mW", 1.0}, {"W", 1000.0}}},
      {"area", {{"um2", 1e-6}, {"mm2", 1.0}}},
      {"latency", {{"us", 1e-3}, {"ms", 1.0}, {"s", 1000.0}}},
  };
  const auto& units = kUnits.at(key);
  for (const Unit& u : units) {
    std::string suf = u.suffix;
    if (text.size() <= suf.size()) continue;
    if (text.compare(text.size() - suf.size(), suf.size(), suf) != 0) continue;
    std::string num = text.substr(0, text.size() - suf.size());
    // "48ms" must not match the bare "s" unit
    if (!num.empty() && (std::isalpha((unsigned char)num.back()))) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(num, &used);
    } catch (const std::exception&) {
      throw SearchError("bad budget value '" + text + "' for " + key);
    }
    if (used != num.size() || !(v > 0) || !std::isfinite(v))
      throw SearchError("bad budget value '" + text + "' for " + key);
    return v * u.scale;
  }
  throw SearchError("budget component '" + key + "' needs a unit suffix, got '" +
                    text + "'");
}

std::array<double, 3> triple(const PpaMetrics& m) {
  return {m.power_mw, m.area_um2, m.latency_ms};
}

bool dominates(const PpaMetrics& a, const PpaMetrics& b) {
  std::array<double, 3> x = triple(a), y = triple(b);
  bool all_le = true, one_lt = false;
  for (int i = 0; i < 3; ++i) {
    if (x[i] > y[i]) all_le = false;
    if (x[i] < y[i]) one_lt = true;
  }
  return all_le && one_lt;
}

bool entry_less(const SearchEntry& a, const SearchEntry& b) {
  if (triple(a.metrics) != triple(b.metrics))
    return triple(a.metrics) < triple(b.metrics);
  return config_key(a.config) < config_key(b.config);
}

double area_mm2_of(const PpaMetrics& m) { return m.area_um2 * 1e-6; }

bool meets(const PpaMetrics& m, const Budget& b) {
  if (b.power_mw && m.power_mw > *b.power_mw) return false;
  if (b.area_mm2 && area_mm2_of(m) > *b.area_mm2) return false;
  if (b.latency_ms && m.latency_ms > *b.latency_ms) return false;
  return true;
}

double violation(const PpaMetrics& m, const Budget& b) {
  double total = 0;
  if (b.power_mw) total += std::max(0.0, (m.power_mw - *b.power_mw) / *b.power_mw);
  if (b.area_mm2)
    total += std::max(0.0, (area_mm2_of(m) - *b.area_mm2) / *b.area_mm2);
  if (b.latency_ms)
    total += std::max(0.0, (m.latency_ms - *b.latency_ms) / *b.latency_ms);
  return total;
}

nlohmann::json entry_to_json(const SearchEntry& e) {
  return {{"config", config_to_json(e.config)},
          {"metrics", ppa_to_json(e.metrics)}};
}

}  // namespace

Budget budget_from_text(const std::string& text) {
  Budget b;
  std::string t = trim(text);
  if (t.empty()) return b;
  for (const std::string& part : split(t, ',')) {
    std::string p = trim(part);
    std::size_t eq = p.find('=');
    if (eq == std::string::npos)
      throw SearchError("budget component '" + p + "' is not key=value");
    std::string key = trim(p.substr(0, eq));
    std::string val = trim(p.substr(eq + 1));
    if (key == "power") {
      if (b.power_mw) throw SearchError("duplicate budget component 'power'");
      b.power_mw = parse_component("power", val);
    } else if (key == "area") {
      if (b.area_mm2) throw SearchError("duplicate budget component 'area'");
      b.area_mm2 = parse_component("area", val);
    } else if (key == "latency") {
      if (b.latency_ms) throw SearchError("duplicate budget component 'latency'");
      b.latency_ms = parse_component("latency", val);
    } else {
      throw SearchError("unknown budget component '" + key +
                        "' (expected power, area, or latency)");
    }
  }
  return b;
}

nlohmann::json budget_to_json(const Budget& b) {
  nlohmann::json j = nlohmann::json::object();
  if (b.power_mw) j["power_mw"] = *b.power_mw;
  if (b.area_mm2) j["area_mm2"] = *b.area_mm2;
  if (b.latency_ms) j["latency_ms"] = *b.latency_ms;
  return j;
}

Budget budget_from_json(const nlohmann::json& j) {
  try {
    Budget b;
    if (j.contains("power_mw")) b.power_mw = j.at("power_mw").get<double>();
    if (j.contains("area_mm2")) b.area_mm2 = j.at("area_mm2").get<double>();
    if (j.contains("latency_ms")) b.latency_ms = j.at("latency_ms").get<double>();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw SearchError(std::string("bad budget json: ") + e.what());
  }
}

const char* objective_name(Objective o) {
  switch (o) {
    case Objective::Power: return "power";
    case Objective::Area: return "area";
    case Objective::Latency: return "latency";
    case Objective::Weighted: return "weighted";
  }
  throw SearchError("unknown objective");
}

Objective objective_from_name(const std::string& name) {
  if (name == "power") return Objective::Power;
  if (name == "area") return Objective::Area;
  if (name == "latency") return Objective::Latency;
  if (name == "weighted") return Objective::Weighted;
  throw SearchError("unknown objective '" + name +
                    "' (expected power, area, latency, or weighted)");
}

std::vector<SearchEntry> entries_from_records(
    const std::vector<DatasetRecord>& records) {
  std::vector<SearchEntry> out;
  out.reserve(records.size());
  for (const DatasetRecord& r : records) out.push_back({r.config, r.ppa});
  return out;
}

std::vector<SearchEntry> entries_from_grid(const GridSpec& grid,
                                           const PpaAdapter& adapter,
                                           u64 workload_k) {
  std::vector<SearchEntry> out;
  for (const TpuConfig& cfg : enumerate_grid(grid))
    out.push_back({cfg, run_ppa(adapter, emit_project(cfg), workload_k)});
  return out;
}

std::vector<SearchEntry> pareto_front(const std::vector<SearchEntry>& entries) {
  std::vector<SearchEntry> front;
  for (const SearchEntry& e : entries) {
    bool dominated = false;
    for (const SearchEntry& other : entries) {
      if (dominates(other.metrics, e.metrics)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(e);
  }
  std::sort(front.begin(), front.end(), entry_less);
  return front;
}

std::map<std::string, double> deviation_report(const PpaMetrics& chosen,
                                               const Budget& reference) {
  std::map<std::string, double> dev;
  if (reference.power_mw)
    dev["power_mw"] = (chosen.power_mw - *reference.power_mw) / *reference.power_mw;
  if (reference.area_mm2)
    dev["area_mm2"] =
        (area_mm2_of(chosen) - *reference.area_mm2) / *reference.area_mm2;
  if (reference.latency_ms)
    dev["latency_ms"] =
        (chosen.latency_ms - *reference.latency_ms) / *reference.latency_ms;
  return dev;
}

SearchOutcome search(const std::vector<SearchEntry>& entries,
                     const Budget& budget, Objective objective,
                     const SearchWeights& weights) {
  if (entries.empty()) throw SearchError("empty source: nothing to search");
  if (weights.power < 0 || weights.area < 0 || weights.latency < 0)
    throw SearchError("objective weights must be nonnegative");

  // normalization for the weighted objective: budget reference when given,
  // else the source maximum (so all terms are O(1) and unit-free)
  double norm_p = 1, norm_a = 1, norm_l = 1;
  if (objective == Objective::Weighted) {
    double max_p = 0, max_a = 0, max_l = 0;
    for (const SearchEntry& e : entries) {
      max_p = std::max(max_p, e.metrics.power_mw);
      max_a = std::max(max_a, e.metrics.area_um2);
      max_l = std::max(max_l, e.metrics.latency_ms);
    }
    norm_p = budget.power_mw ? *budget.power_mw : (max_p > 0 ? max_p : 1);
    norm_a = budget.area_mm2 ? *budget.area_mm2 * 1e6 : (max_a > 0 ? max_a : 1);
    norm_l = budget.latency_ms ? *budget.latency_ms : (max_l > 0 ? max_l : 1);
  }
  auto objective_of = [&](const PpaMetrics& m) {
    switch (objective) {
      case Objective::Power: return m.power_mw;
      case Objective::Area: return m.area_um2;
      case Objective::Latency: return m.latency_ms;
      case Objective::Weighted:
        return weights.power * m.power_mw / norm_p +
               weights.area * m.area_um2 / norm_a +
               weights.latency * m.latency_ms / norm_l;
    }
    throw SearchError("unknown objective");
  };

  std::vector<SearchEntry> feasible;
  for (const SearchEntry& e : entries)
    if (meets(e.metrics, budget)) feasible.push_back(e);

  const bool any_feasible = !feasible.empty();
  const std::vector<SearchEntry>& pool = any_feasible ? feasible : entries;
  auto score = [&](const SearchEntry& e) {
    return any_feasible ? objective_of(e.metrics) : violation(e.metrics, budget);
  };

  const SearchEntry* best = &pool.front();
  for (const SearchEntry& e : pool) {
    double se = score(e), sb = score(*best);
    if (se < sb || (se == sb && entry_less(e, *best))) best = &e;
  }

  SearchOutcome out;
  out.chosen = *best;
  out.feasible = any_feasible;
  out.feasible_count = feasible.size();
  out.objective_value = objective_of(best->metrics);
  if (budget.power_mw)
    out.slack["power_mw"] = *budget.power_mw - best->metrics.power_mw;
  if (budget.area_mm2)
    out.slack["area_mm2"] = *budget.area_mm2 - area_mm2_of(best->metrics);
  if (budget.latency_ms)
    out.slack["latency_ms"] = *budget.latency_ms - best->metrics.latency_ms;
  out.pareto = pareto_front(pool);
  return out;
}

nlohmann::json outcome_to_json(const SearchOutcome& outcome,
                               const Budget& budget, Objective objective) {
  nlohmann::json pareto = nlohmann::json::array();
  for (const SearchEntry& e : outcome.pareto) pareto.push_back(entry_to_json(e));
  return {{"chosen", entry_to_json(outcome.chosen)},
          {"feasible", outcome.feasible},
          {"feasible_count", outcome.feasible_count},
          {"objective", objective_name(objective)},
          {"objective_value", outcome.objective_value},
          {"budget", budget_to_json(budget)},
          {"slack", outcome.slack},
          {"deviation", deviation_report(outcome.chosen.metrics, budget)},
          {"pareto", pareto}};
}

}  // namespace tpugen
