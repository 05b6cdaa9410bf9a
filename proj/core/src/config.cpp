#include "tpugen/config.hpp"

#include <algorithm>

namespace tpugen {

TpuConfig default_config(int s, int dw, int ww, const MultUnit& mult,
                         const AdderUnit& adder) {
  TpuConfig cfg;
  cfg.s = s;
  cfg.dw = dw;
  cfg.ww = ww;
  cfg.mult = mult;
  cfg.adder = adder;
  cfg.acc_width = default_acc_width(dw, ww);
  cfg.fifo_depth = 2 * s;
  return cfg;
}

std::optional<std::string> config_problem(const TpuConfig& cfg) {
  bool size_ok = false;
  for (int s : kSupportedSizes) size_ok |= (cfg.s == s);
  if (!size_ok) return "array size " + std::to_string(cfg.s) + " unsupported";
  bool dw_ok = false;
  for (int d : kSupportedDws) dw_ok |= (cfg.dw == d);
  if (!dw_ok) return "data width " + std::to_string(cfg.dw) + " unsupported";
  if (cfg.ww < kMinWw || cfg.ww > kMaxWw)
    return "weight width " + std::to_string(cfg.ww) + " out of range";
  if (cfg.acc_width < cfg.dw + cfg.ww || cfg.acc_width > 64)
    return "accumulator width " + std::to_string(cfg.acc_width) +
           " out of range";
  if (cfg.fifo_depth < 1) return "fifo depth must be positive";
  if (!(cfg.clock_period_ns > 0)) return "clock period must be positive";
  if (cfg.k_max < 1) return "k_max must be positive";
  if (cfg.dataflow != "os") return "unsupported dataflow " + cfg.dataflow;
  try {
    validate_mult(cfg.mult, mult_width(cfg.dw, cfg.ww));
    validate_adder(cfg.adder, cfg.acc_width);
  } catch (const ParamError& e) {
    return std::string(e.what());
  }
  return std::nullopt;
}

nlohmann::json config_to_json(const TpuConfig& cfg) {
  nlohmann::json j;
  j["s"] = cfg.s;
  j["dw"] = cfg.dw;
  j["ww"] = cfg.ww;
  j["mult"] = render_mult(cfg.mult);
  j["adder"] = render_adder(cfg.adder);
  j["acc_width"] = cfg.acc_width;
  j["fifo_depth"] = cfg.fifo_depth;
  j["clock_period_ns"] = cfg.clock_period_ns;
  j["k_max"] = cfg.k_max;
  j["dataflow"] = cfg.dataflow;
  return j;
}

TpuConfig config_from_json(const nlohmann::json& j) {
  TpuConfig cfg;
  try {
    cfg.s = j.at("s").get<int>();
    cfg.dw = j.at("dw").get<int>();
    cfg.ww = j.at("ww").get<int>();
    cfg.acc_width = j.at("acc_width").get<int>();
    cfg.fifo_depth = j.at("fifo_depth").get<int>();
    cfg.clock_period_ns = j.at("clock_period_ns").get<double>();
    cfg.k_max = j.at("k_max").get<int>();
    cfg.dataflow = j.at("dataflow").get<std::string>();
    cfg.mult = parse_mult_text(j.at("mult").get<std::string>(),
                               mult_width(cfg.dw, cfg.ww));
    cfg.adder =
        parse_adder_text(j.at("adder").get<std::string>(), cfg.acc_width);
  } catch (const nlohmann::json::exception& e) {
    throw ParamError(std::string("bad config json: ") + e.what());
  }
  return cfg;
}

std::string config_key(const TpuConfig& cfg) {
  return config_to_json(cfg).dump();
}

u64 os_cycle_count(int s, int k) {
  // 2(S-1) skew-in, K accumulation steps, S column-serial drain
  return static_cast<u64>(2 * (s - 1)) + k + s;
}

}  // namespace tpugen
