#pragma once

// Fully resolved hardware configuration: every template parameter bound.
// This is the value the emitter, simulator, validator, and dataset builder
// all agree on; its sorted-key JSON form is the canonical identity.

#include <optional>
#include <string>

#include "json.hpp"
#include "tpugen/arith.hpp"

namespace tpugen {

inline constexpr int kSupportedSizes[] = {4, 8, 16, 32, 64, 128, 256};
inline constexpr int kSupportedDws[] = {8, 16, 32};
inline constexpr int kMinWw = 3, kMaxWw = 32;

struct TpuConfig {
  int s = 8;
  int dw = 8;
  int ww = 8;
  MultUnit mult{"exact", {}};
  AdderUnit adder{"exact", {}};
  int acc_width = 28;
  int fifo_depth = 16;
  double clock_period_ns = 2.0;
  int k_max = 4096;
  std::string dataflow = "os";

  bool operator==(const TpuConfig&) const = default;
};

// Config with every derived field at its default for (s, dw, ww, units).
TpuConfig default_config(int s, int dw, int ww, const MultUnit& mult,
                         const AdderUnit& adder);

// Human-readable reason the config is unusable, or nullopt when valid.
std::optional<std::string> config_problem(const TpuConfig& cfg);

// Sorted-key JSON with units in mini-syntax; injective over valid configs.
nlohmann::json config_to_json(const TpuConfig& cfg);
TpuConfig config_from_json(const nlohmann::json& j);  // throws ParamError

// Serialized JSON string: the deterministic ordering/identity key.
std::string config_key(const TpuConfig& cfg);

// cycles to stream one S x K by K x S tile through the array and drain it
u64 os_cycle_count(int s, int k);

}  // namespace tpugen
