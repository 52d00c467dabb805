#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lrf/applications.hpp"
#include "lrf/fields.hpp"
#include "lrf/innovations.hpp"

namespace lrf {

struct DavisGutRunSpec {
  DavisGutSpec spec;
  std::vector<std::int64_t> n_values{16, 32, 64};
  std::int64_t n_max = 1000000;
  std::int64_t mc_max_n = 0;  // MC probabilities for emitted n up to this
};

struct RegressionRunSpec {
  int dim = 2;
  KernelKind kernel = KernelKind::Epanechnikov;
  double bandwidth = 0.25;
  std::array<double, 2> eval_point{0.5, 0.5};
};

struct ExperimentConfig {
  std::string mode;
  std::uint64_t seed = 1;
  double epsilon = 1e-6;
  std::int64_t n_samples = 100000;
  bool two_sided = false;
  std::vector<double> thresholds;
  double p = 4.0;
  std::optional<double> t;
  double ratio_lo = 0.85;
  double ratio_hi = 1.15;
  double ct_margin = 0.05;
  std::int64_t max_window_cells = std::int64_t(1) << 26;
  std::string out_dir = "out";

  std::optional<CoefficientField> field;
  std::vector<IndexRegion> regions;
  std::optional<InnovationModel> innovation;
  RegressionRunSpec regression;
  std::optional<DavisGutRunSpec> davis_gut;

  std::string canonical_json;  // normalized echo of the parsed document
};

// Parses and validates a config document; throws ConfigError with a message
// naming the offending key.
ExperimentConfig parse_config(const std::string& json_text);

std::string config_hash_hex(const ExperimentConfig& config);

struct RunResult {
  int exit_code = 0;  // 0 ok, 1 failed verification
  std::vector<std::pair<std::string, std::string>> files;  // name -> content
};

// Runs one experiment mode; outputs are assembled in memory so a failure
// produces no partial files.
RunResult run_experiment(const ExperimentConfig& config, int workers = 0);

void write_outputs(const RunResult& result,
                   const std::filesystem::path& out_dir);

}  // namespace lrf
