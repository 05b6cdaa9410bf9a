#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tpugen/arith.hpp"
#include "tpugen/dataset.hpp"
#include "tpugen/emitter.hpp"
#include "tpugen/search.hpp"

#include <algorithm>
#include <random>
#include <vector>

using namespace tpugen;

namespace {

TpuConfig cfg_of(int s, int dw, int ww, const std::string& mt,
                 const std::string& at) {
  return default_config(s, dw, ww, parse_mult_text(mt, mult_width(dw, ww)),
                        parse_adder_text(at, default_acc_width(dw, ww)));
}

std::vector<SearchEntry> mock_grid_entries() {
  GridSpec g;
  g.sizes = {4, 8, 16, 32};
  g.dws = {8, 16};
  g.wws = {8};
  g.mults = {"exact", "drum"};
  g.adders = {"exact"};
  return entries_from_grid(g, mock_ppa_adapter(), 4096);
}

// independent dominance and selection logic for oracles
bool dom(const PpaMetrics& a, const PpaMetrics& b) {
  bool le = a.power_mw <= b.power_mw && a.area_um2 <= b.area_um2 &&
            a.latency_ms <= b.latency_ms;
  bool lt = a.power_mw < b.power_mw || a.area_um2 < b.area_um2 ||
            a.latency_ms < b.latency_ms;
  return le && lt;
}

bool tuple_less(const SearchEntry& a, const SearchEntry& b) {
  auto ta = std::make_tuple(a.metrics.power_mw, a.metrics.area_um2,
                            a.metrics.latency_ms, config_to_json(a.config).dump());
  auto tb = std::make_tuple(b.metrics.power_mw, b.metrics.area_um2,
                            b.metrics.latency_ms, config_to_json(b.config).dump());
  return ta < tb;
}

SearchEntry oracle_pick(const std::vector<SearchEntry>& pool,
                        double (*obj)(const PpaMetrics&)) {
  const SearchEntry* best = nullptr;
  for (const SearchEntry& e : pool) {
    if (!best || obj(e.metrics) < obj(best->metrics) ||
        (obj(e.metrics) == obj(best->metrics) && tuple_less(e, *best)))
      best = &e;
  }
  return *best;
}

}  // namespace

TEST_CASE("budget text parses units onto mW, mm2, ms") {
  Budget b = budget_from_text("power=100mW,area=0.25mm2,latency=48ms");
  CHECK(b.power_mw == 100.0);
  CHECK(b.area_mm2 == 0.25);
  CHECK(b.latency_ms == 48.0);

  CHECK(budget_from_text("power=2W").power_mw == 2000.0);
  CHECK(budget_from_text("area=250000um2").area_mm2 == 0.25);
  CHECK(budget_from_text("latency=1s").latency_ms == 1000.0);
  CHECK(budget_from_text("latency=500us").latency_ms == 0.5);
  CHECK(budget_from_text(" area = 1mm2 ").area_mm2 == 1.0);
  CHECK(budget_from_text("") == Budget{});
  CHECK_FALSE(budget_from_text("power=1mW").area_mm2.has_value());

  CHECK_THROWS_WITH_AS(budget_from_text("speed=3ms"),
                       doctest::Contains("unknown budget component"),
                       SearchError);
  CHECK_THROWS_WITH_AS(budget_from_text("power=100"),
                       doctest::Contains("unit suffix"), SearchError);
  CHECK_THROWS_WITH_AS(budget_from_text("power=12..3mW"),
                       doctest::Contains("bad budget value"), SearchError);
  CHECK_THROWS_WITH_AS(budget_from_text("power=fastmW"),
                       doctest::Contains("unit suffix"), SearchError);
  CHECK_THROWS_WITH_AS(budget_from_text("power=-5mW"),
                       doctest::Contains("bad budget value"), SearchError);
  CHECK_THROWS_WITH_AS(budget_from_text("power"),
                       doctest::Contains("key=value"), SearchError);
  CHECK_THROWS_WITH_AS(budget_from_text("power=1mW,power=2mW"),
                       doctest::Contains("duplicate"), SearchError);

  Budget full = budget_from_text("power=10mW,area=2mm2,latency=3ms");
  CHECK(budget_from_json(budget_to_json(full)) == full);
  CHECK(budget_from_json(budget_to_json(Budget{})) == Budget{});
  CHECK_THROWS_AS(budget_from_json(nlohmann::json{{"power_mw", "lots"}}),
                  SearchError);
}

TEST_CASE("objective names round-trip") {
  for (Objective o : {Objective::Power, Objective::Area, Objective::Latency,
                      Objective::Weighted})
    CHECK(objective_from_name(objective_name(o)) == o);
  CHECK_THROWS_WITH_AS(objective_from_name("speed"),
                       doctest::Contains("unknown objective"), SearchError);
}

TEST_CASE("pareto front matches the quadratic oracle") {
  TpuConfig base = cfg_of(4, 8, 8, "exact", "exact");
  auto entry = [&](double p, double a, double l) {
    SearchEntry e;
    e.config = base;
    e.metrics = {a, p, 1.0, l, "mock 1"};
    return e;
  };

  std::vector<SearchEntry> one = {entry(3, 4, 5)};
  CHECK(pareto_front(one) == one);

  std::vector<SearchEntry> two = {entry(3, 4, 5), entry(2, 4, 5)};
  std::vector<SearchEntry> front = pareto_front(two);
  REQUIRE(front.size() == 1);
  CHECK(front[0].metrics.power_mw == 2);

  // exact duplicates are not strictly dominated; both survive
  std::vector<SearchEntry> dup = {entry(1, 1, 1), entry(1, 1, 1)};
  CHECK(pareto_front(dup).size() == 2);

  // incomparable points all survive
  std::vector<SearchEntry> diag = {entry(1, 3, 1), entry(2, 2, 1), entry(3, 1, 1)};
  CHECK(pareto_front(diag).size() == 3);

  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> d(0, 9);
  std::vector<SearchEntry> big;
  for (int i = 0; i < 1000; ++i)
    big.push_back(entry(d(rng), d(rng), d(rng)));
  std::vector<SearchEntry> got = pareto_front(big);
  std::vector<SearchEntry> want;
  for (const SearchEntry& e : big) {
    bool dominated = false;
    for (const SearchEntry& o : big)
      if (dom(o.metrics, e.metrics)) dominated = true;
    if (!dominated) want.push_back(e);
  }
  std::sort(want.begin(), want.end(), tuple_less);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
  for (const SearchEntry& f : got)
    for (const SearchEntry& o : big) CHECK_FALSE(dom(o.metrics, f.metrics));
}

TEST_CASE("deviation report is signed and skips absent references") {
  PpaMetrics m{250000.0, 100.0, 1.0, 48.0, "mock 1"};
  Budget ref = budget_from_text("power=100mW,area=0.25mm2,latency=48ms");
  std::map<std::string, double> dev = deviation_report(m, ref);
  CHECK(dev.at("power_mw") == 0.0);
  CHECK(dev.at("area_mm2") == 0.0);
  CHECK(dev.at("latency_ms") == 0.0);

  m.power_mw = 50;
  CHECK(deviation_report(m, ref).at("power_mw") == -0.5);
  m.latency_ms = 96;
  CHECK(deviation_report(m, ref).at("latency_ms") == 1.0);

  Budget only_power = budget_from_text("power=100mW");
  std::map<std::string, double> partial = deviation_report(m, only_power);
  CHECK(partial.size() == 1);
  CHECK(partial.count("area_mm2") == 0);

  nlohmann::json j = dev;
  CHECK(j.get<std::map<std::string, double>>() == dev);
}

TEST_CASE("search honors budget filters and minimizes the objective") {
  std::vector<SearchEntry> entries = mock_grid_entries();
  REQUIRE(entries.size() == 16);

  // loose budget: global minimum of each single-metric objective
  Budget loose = budget_from_text("power=1000000mW,area=1000mm2,latency=100000ms");
  for (Objective o : {Objective::Power, Objective::Area, Objective::Latency}) {
    SearchOutcome out = search(entries, loose, o);
    CHECK(out.feasible);
    CHECK(out.feasible_count == entries.size());
    double best = 1e300;
    for (const SearchEntry& e : entries) {
      double v = o == Objective::Power    ? e.metrics.power_mw
                 : o == Objective::Area   ? e.metrics.area_um2
                                          : e.metrics.latency_ms;
      best = std::min(best, v);
    }
    double got = o == Objective::Power    ? out.chosen.metrics.power_mw
                 : o == Objective::Area   ? out.chosen.metrics.area_um2
                                          : out.chosen.metrics.latency_ms;
    CHECK(got == best);
    for (const auto& [k, v] : out.slack) CHECK(v >= 0);
  }

  // budget set to one entry's exact metrics admits it with zero slack
  SearchEntry smallest = oracle_pick(
      entries, +[](const PpaMetrics& m) { return m.area_um2; });
  Budget exact;
  exact.power_mw = smallest.metrics.power_mw;
  exact.area_mm2 = smallest.metrics.area_um2 * 1e-6;
  exact.latency_ms = smallest.metrics.latency_ms;
  SearchOutcome tight = search(entries, exact, Objective::Area);
  CHECK(tight.feasible);
  CHECK(tight.chosen == smallest);
  CHECK(tight.slack.at("power_mw") == 0.0);
  CHECK(tight.slack.at("area_mm2") == 0.0);
  CHECK(tight.slack.at("latency_ms") == 0.0);

  CHECK_THROWS_WITH_AS(search({}, loose, Objective::Power),
                       doctest::Contains("empty source"), SearchError);
  SearchWeights neg;
  neg.area = -1;
  CHECK_THROWS_AS(search(entries, loose, Objective::Weighted, neg), SearchError);
}

TEST_CASE("reference budget over the mock grid equals the brute-force scan") {
  std::vector<SearchEntry> entries = mock_grid_entries();
  Budget ref = budget_from_text("power=100mW,area=0.25mm2,latency=48ms");

  std::vector<SearchEntry> feas;
  for (const SearchEntry& e : entries)
    if (e.metrics.power_mw <= 100.0 && e.metrics.area_um2 <= 250000.0 &&
        e.metrics.latency_ms <= 48.0)
      feas.push_back(e);
  REQUIRE_FALSE(feas.empty());
  REQUIRE(feas.size() < entries.size());  // the budget actually bites

  struct Case {
    Objective o;
    double (*obj)(const PpaMetrics&);
  };
  std::vector<Case> cases = {
      {Objective::Power, +[](const PpaMetrics& m) { return m.power_mw; }},
      {Objective::Area, +[](const PpaMetrics& m) { return m.area_um2; }},
      {Objective::Latency, +[](const PpaMetrics& m) { return m.latency_ms; }},
      {Objective::Weighted, +[](const PpaMetrics& m) {
         return m.power_mw / 100.0 + m.area_um2 / 250000.0 +
                m.latency_ms / 48.0;
       }},
  };
  for (const Case& c : cases) {
    SearchOutcome out = search(entries, ref, c.o);
    CHECK(out.feasible);
    CHECK(out.feasible_count == feas.size());
    CHECK(out.chosen == oracle_pick(feas, c.obj));
    // the chosen entry is on the reported front and undominated in-pool
    CHECK(std::count(out.pareto.begin(), out.pareto.end(), out.chosen) == 1);
    for (const SearchEntry& e : feas)
      CHECK_FALSE(dom(e.metrics, out.chosen.metrics));
    // determinism: shuffled input changes nothing
    std::vector<SearchEntry> shuffled = entries;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(5));
    CHECK(search(shuffled, ref, c.o) == out);
  }

  nlohmann::json j = outcome_to_json(search(entries, ref, Objective::Power),
                                     ref, Objective::Power);
  CHECK(j.at("objective") == "power");
  CHECK(j.at("feasible") == true);
  CHECK(config_from_json(j.at("chosen").at("config")) ==
        search(entries, ref, Objective::Power).chosen.config);
  CHECK(budget_from_json(j.at("budget")) == ref);
  CHECK(j.at("pareto").is_array());
  CHECK(j.at("deviation").at("power_mw").get<double>() <= 0.0);
}

TEST_CASE("infeasible budgets pick the least-violating entry") {
  std::vector<SearchEntry> entries = mock_grid_entries();
  Budget impossible = budget_from_text("power=0.001mW,area=0.000001mm2");
  SearchOutcome out = search(entries, impossible, Objective::Power);
  CHECK_FALSE(out.feasible);
  CHECK(out.feasible_count == 0);
  CHECK(out.slack.at("power_mw") < 0);
  CHECK(out.slack.at("area_mm2") < 0);

  // oracle: minimal sum of relative overruns
  const SearchEntry* best = nullptr;
  auto viol = [&](const PpaMetrics& m) {
    return (m.power_mw - 0.001) / 0.001 + (m.area_um2 * 1e-6 - 1e-6) / 1e-6;
  };
  for (const SearchEntry& e : entries)
    if (!best || viol(e.metrics) < viol(best->metrics) ||
        (viol(e.metrics) == viol(best->metrics) && tuple_less(e, *best)))
      best = &e;
  CHECK(out.chosen == *best);
  CHECK(std::count(out.pareto.begin(), out.pareto.end(), out.chosen) == 1);
}

TEST_CASE("relaxing a budget never worsens the chosen objective") {
  std::vector<SearchEntry> entries = mock_grid_entries();
  double last = 1e300;
  for (double mm2 : {0.02, 0.05, 0.1, 0.25, 0.5, 1.0}) {
    Budget b;
    b.area_mm2 = mm2;
    SearchOutcome out = search(entries, b, Objective::Power);
    if (out.feasible) {
      CHECK(out.chosen.metrics.power_mw <= last);
      last = out.chosen.metrics.power_mw;
    }
  }
  last = 1e300;
  for (double mw : {20.0, 50.0, 120.0, 400.0, 1e6}) {
    Budget b;
    b.power_mw = mw;
    SearchOutcome out = search(entries, b, Objective::Area);
    if (out.feasible) {
      CHECK(out.chosen.metrics.area_um2 <= last);
      last = out.chosen.metrics.area_um2;
    }
  }
}

TEST_CASE("entry sources agree with their originals") {
  GridSpec g;
  g.sizes = {4, 8};
  g.dws = {8};
  g.wws = {8};
  g.mults = {"exact"};
  g.adders = {"exact"};
  std::vector<SearchEntry> from_grid =
      entries_from_grid(g, mock_ppa_adapter(), 64);
  std::vector<TpuConfig> cfgs = enumerate_grid(g);
  REQUIRE(from_grid.size() == cfgs.size());
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    CHECK(from_grid[i].config == cfgs[i]);
    CHECK(from_grid[i].metrics ==
          run_ppa(mock_ppa_adapter(), emit_project(cfgs[i]), 64));
  }

  BuildOptions opts;
  opts.workload_k = 64;
  opts.timestamp = "2026-08-22T00:00:00Z";
  std::vector<DatasetRecord> records;
  for (const TpuConfig& cfg : cfgs)
    records.push_back(build_record(cfg, build_index({}), mock_ppa_adapter(), opts));
  std::vector<SearchEntry> from_records = entries_from_records(records);
  CHECK(from_records == from_grid);
}
