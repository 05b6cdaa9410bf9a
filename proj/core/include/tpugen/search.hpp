#pragma once

// Budget-constrained configuration selection over PPA-annotated entries.
// The scan is exhaustive: grids at desk scale stay well under 1e5 points,
// and an exhaustive scan is its own oracle, so results are reproducible
// across runs and platforms by construction.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tpugen/config.hpp"
#include "tpugen/dataset.hpp"
#include "tpugen/design.hpp"

namespace tpugen {

struct SearchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The Budget type lives in design.hpp (specs can state one in prose); its
// components are optional and an absent one constrains nothing. Note the
// unit split: budgets carry area in mm^2, metrics in um^2.

// "power=100mW,area=0.25mm2,latency=48ms". Accepted units: power mW|W,
// area um2|mm2, latency us|ms|s. Empty text means an empty budget.
Budget budget_from_text(const std::string& text);
nlohmann::json budget_to_json(const Budget& b);
Budget budget_from_json(const nlohmann::json& j);

enum class Objective { Power, Area, Latency, Weighted };

const char* objective_name(Objective o);
Objective objective_from_name(const std::string& name);

// Weighted objective = sum of w_i * metric_i / norm_i with norm_i taken
// from the budget component when present, else the source maximum.
struct SearchWeights {
  double power = 1.0;
  double area = 1.0;
  double latency = 1.0;

  bool operator==(const SearchWeights&) const = default;
};

struct SearchEntry {
  TpuConfig config;
  PpaMetrics metrics;

  bool operator==(const SearchEntry&) const = default;
};

std::vector<SearchEntry> entries_from_records(
    const std::vector<DatasetRecord>& records);
std::vector<SearchEntry> entries_from_grid(const GridSpec& grid,
                                           const PpaAdapter& adapter,
                                           u64 workload_k);

// Nondominated subset under (power, area, latency): an entry is dropped
// iff some other entry is <= on all three and < on at least one. Exact
// duplicates survive together. Returned sorted by metric triple, then by
// the config's canonical json, so the front is platform-stable.
std::vector<SearchEntry> pareto_front(const std::vector<SearchEntry>& entries);

// Signed relative deviation (value - reference) / reference for every
// budget component that is present; absent components are omitted.
std::map<std::string, double> deviation_report(const PpaMetrics& chosen,
                                               const Budget& reference);

struct SearchOutcome {
  SearchEntry chosen;
  bool feasible = false;    // chosen meets every budget component
  u64 feasible_count = 0;
  double objective_value = 0.0;
  // budget - value per present component; positive means headroom
  std::map<std::string, double> slack;
  std::vector<SearchEntry> pareto;  // front of the set chosen came from

  bool operator==(const SearchOutcome&) const = default;
};

// Exhaustive scan. Feasible entries compete on the objective; if nothing
// is feasible the entry with the smallest total relative budget violation
// wins and the outcome is flagged infeasible. Ties break on the metric
// triple and then the config's canonical json, which also guarantees the
// winner sits on the reported pareto front.
SearchOutcome search(const std::vector<SearchEntry>& entries,
                     const Budget& budget, Objective objective,
                     const SearchWeights& weights = {});

nlohmann::json outcome_to_json(const SearchOutcome& outcome,
                               const Budget& budget, Objective objective);

}  // namespace tpugen
