#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qatm/calibration.hpp"
#include "qatm/evaluation.hpp"
#include "qatm/pipeline.hpp"

namespace qatm {

enum class Command { kMatch, kCalibrateAlpha, kEvaluate, kBench, kExportFeatures };

/// Settings for one command-line invocation. Fields that a command does not
/// use are ignored.
struct RunConfig {
  Command command = Command::kMatch;
  double alpha = kDefaultAlpha;
  Method method = Method::kQatm;
  FeatureSource features = FeatureSource::kRaw;
  std::uint64_t seed = 0;

  // match: images (raw) or FTM1 files (ftm).
  std::filesystem::path template_path;
  std::filesystem::path search_path;
  std::size_t patch = 3;
  std::size_t stride = 1;
  bool normalize = true;
  bool grayscale = false;
  std::filesystem::path out_dir;
  bool heatmaps = false;
  bool include_timing = true;

  // evaluate / bench
  std::filesystem::path manifest;
  std::filesystem::path report;
  bool add_negatives = false;
  std::size_t repetitions = 3;
  std::vector<Method> bench_methods;

  // calibrate-alpha
  CalibrationConfig calibration;
  std::filesystem::path csv_out;

  // export-features
  std::filesystem::path image;
  std::filesystem::path ftm_out;

  void validate() const;
  EvalOptions eval_options() const;
};

struct MatchRun {
  MatchOutcome outcome;
  std::string json;
};

/// Loads both inputs, matches, and when out_dir is set writes result.json
/// (plus search_map.pgm / template_map.pgm with --heatmaps).
MatchRun run_match(const RunConfig& cfg);

/// Writes "alpha,discernibility" CSV rows (with a header line) to csv.
CalibrationResult run_calibrate(const RunConfig& cfg, std::ostream& csv);

/// Evaluates the manifest (optionally augmented with negatives) and writes
/// the JSON report when cfg.report is set.
EvalReport run_evaluate(const RunConfig& cfg);

/// Per-method timing as JSON; written to cfg.report when set.
std::string run_bench(const RunConfig& cfg);

/// Extracts raw patch features from cfg.image and saves them as FTM1.
FeatureMap run_export_features(const RunConfig& cfg);

/// Process exit code for an exception escaping one of the commands.
int exit_code_for(const std::exception& e) noexcept;

}  // namespace qatm
