#pragma once

// Error characterization of approximate units and full-array configs:
// MED / NMED / MRED / max error distance / error rate, by exhaustive sweep
// or seeded sampling.

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "tpugen/config.hpp"

namespace tpugen {

struct MetricsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ErrorReport {
  double med = 0;         // mean |approx - exact|
  double nmed = 0;        // med / max exact output of the unit family
  double mred = 0;        // mean relative error over nonzero-exact pairs
  u64 max_ed = 0;
  double error_rate = 0;  // fraction of pairs with approx != exact
  u64 n_evaluated = 0;
  std::string mode;       // "exhaustive" | "sampled"
  u64 seed = 0;           // meaningful in sampled mode only
  u64 n_mred_pairs = 0;   // pairs entering mred (exact == 0 excluded)

  bool operator==(const ErrorReport&) const = default;
};

// Exhaustive sweeps cost 2^(2W) evaluations; rejected above W=10 with a
// pointer at sampled_report.
ErrorReport exhaustive_report(const MultUnit& u, int w);
ErrorReport exhaustive_report(const AdderUnit& u, int w);

// Seeded uniform pairs; n_samples == 2^(2W) switches to a full sweep so the
// result coincides with the exhaustive report.
ErrorReport sampled_report(const MultUnit& u, int w, u64 n_samples, u64 seed);
ErrorReport sampled_report(const AdderUnit& u, int w, u64 n_samples, u64 seed);

nlohmann::json report_to_json(const ErrorReport& r);

struct MatErrorReport {
  double med = 0;            // element-wise mean |approx - exact|
  double rel_frobenius = 0;  // ||approx - exact||_F / ||exact||_F
  u64 max_ed = 0;
  u64 n_cells = 0;
  bool overflow = false;

  bool operator==(const MatErrorReport&) const = default;
};

// Array-level error: simulate cfg on one tile and compare against the exact
// matmul. A is S x K, B is K x S.
MatErrorReport matmul_error(const TpuConfig& cfg, const Mat& a, const Mat& b);

nlohmann::json mat_report_to_json(const MatErrorReport& r);

}  // namespace tpugen
