// qatm: command-line front end for quality-aware template matching.
//
//   qatm match --template T.png --search S.png [--method qatm] [--out DIR --heatmaps]
//   qatm calibrate-alpha [--mu-plus 0.3 ...] [--out curve.csv]
//   qatm evaluate --manifest m.tsv [--negatives] --report out.json
//   qatm bench --manifest m.tsv --method qatm --method ncc --repetitions 5
//   qatm export-features --image I.png --out I.ftm

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "qatm/commands.hpp"
#include "qatm/error.hpp"
#include "qatm/parallel.hpp"

namespace {

const std::map<std::string, qatm::Method> kMethods{
    {"qatm", qatm::Method::kQatm}, {"ssd", qatm::Method::kSsd}, {"ncc", qatm::Method::kNcc}, {"bupm", qatm::Method::kBupm}};
const std::map<std::string, qatm::FeatureSource> kSources{{"raw", qatm::FeatureSource::kRaw},
                                                          {"ftm", qatm::FeatureSource::kFtm}};

// Enum-valued flags are parsed as strings and mapped after parsing.
struct NamedOptions {
  std::string method = "qatm";
  std::string features = "raw";
};

void add_common(CLI::App* cmd, qatm::RunConfig& cfg, NamedOptions& named, bool single_method = true) {
  cmd->add_option("--alpha", cfg.alpha, "Softmax temperature")->check(CLI::PositiveNumber);
  if (single_method) {
    cmd->add_option("--method", named.method, "qatm|ssd|ncc|bupm")->check(CLI::IsMember({"qatm", "ssd", "ncc", "bupm"}));
  }
  cmd->add_option("--features", named.features, "raw|ftm")->check(CLI::IsMember({"raw", "ftm"}));
  cmd->add_option("--patch", cfg.patch, "Raw patch size in pixels")->check(CLI::PositiveNumber);
  cmd->add_option("--stride", cfg.stride, "Raw patch stride in pixels")->check(CLI::PositiveNumber);
  cmd->add_flag("!--no-normalize", cfg.normalize, "Keep raw pixel values in patch features");
  cmd->add_flag("--grayscale", cfg.grayscale, "Convert colour inputs to BT.601 luma");
  cmd->add_option("--seed", cfg.seed, "Seed for every random choice");
}

}  // namespace

int main(int argc, char** argv) {
  qatm::RunConfig cfg;
  NamedOptions named;
  unsigned workers = 0;

  CLI::App app{"Quality-aware template matching"};
  app.require_subcommand(1);
  app.add_option("--workers", workers, "Worker threads (0 = hardware concurrency)");

  auto* match = app.add_subcommand("match", "Locate a template in a search image");
  add_common(match, cfg, named);
  match->add_option("--template", cfg.template_path, "Template image");
  match->add_option("--search", cfg.search_path, "Search image");
  std::string template_ftm, search_ftm;
  match->add_option("--template-ftm", template_ftm, "Template FTM1 feature file");
  match->add_option("--search-ftm", search_ftm, "Search FTM1 feature file");
  match->add_option("--out", cfg.out_dir, "Directory for result.json and heatmaps");
  match->add_flag("--heatmaps", cfg.heatmaps, "Write PGM heatmaps of the quality maps");
  match->add_flag("!--omit-timing", cfg.include_timing, "Leave wall-clock fields out of the JSON");

  auto* calibrate = app.add_subcommand("calibrate-alpha", "Pick alpha by simulated quality discernibility");
  double alpha_min = 1.0, alpha_max = 60.0, alpha_step = 0.5;
  std::string estimator = "max";
  calibrate->add_option("--mu-plus", cfg.calibration.mu_plus, "Mean of matched scores");
  calibrate->add_option("--sigma-plus", cfg.calibration.sigma_plus, "Std-dev of matched scores");
  calibrate->add_option("--mu-minus", cfg.calibration.mu_minus, "Mean of unmatched scores");
  calibrate->add_option("--sigma-minus", cfg.calibration.sigma_minus, "Std-dev of unmatched scores");
  calibrate->add_option("--n-patches", cfg.calibration.n_patches, "Template patch count N");
  calibrate->add_option("--trials", cfg.calibration.n_trials, "Monte-Carlo trials");
  calibrate->add_option("--alpha-min", alpha_min);
  calibrate->add_option("--alpha-max", alpha_max);
  calibrate->add_option("--alpha-step", alpha_step);
  calibrate->add_option("--estimator", estimator, "max (over all trials) | mean (of per-trial max)")
      ->check(CLI::IsMember({"max", "mean"}));
  calibrate->add_option("--seed", cfg.seed, "RNG seed");
  calibrate->add_option("--out", cfg.csv_out, "CSV path (default: stdout)");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a manifest of template/search pairs");
  add_common(evaluate, cfg, named);
  evaluate->add_option("--manifest", cfg.manifest, "TSV manifest")->required();
  evaluate->add_option("--report", cfg.report, "JSON report path");
  evaluate->add_flag("--negatives", cfg.add_negatives, "Add one cross-group negative per positive");
  evaluate->add_flag("!--omit-timing", cfg.include_timing, "Leave wall-clock fields out of the report");

  auto* bench = app.add_subcommand("bench", "Time matching, feature extraction excluded");
  add_common(bench, cfg, named, false);
  std::vector<std::string> bench_methods;
  bench->add_option("--method", bench_methods, "Methods to time (repeatable)")
      ->check(CLI::IsMember({"qatm", "ssd", "ncc", "bupm"}));
  bench->add_option("--manifest", cfg.manifest, "TSV manifest")->required();
  bench->add_option("--repetitions", cfg.repetitions, "Timed runs per entry");
  bench->add_option("--report", cfg.report, "JSON output path");
  bench->add_flag("--negatives", cfg.add_negatives, "Add one cross-group negative per positive");

  auto* export_cmd = app.add_subcommand("export-features", "Write raw patch features as FTM1");
  add_common(export_cmd, cfg, named);
  export_cmd->add_option("--image", cfg.image, "Input image")->required();
  export_cmd->add_option("--out", cfg.ftm_out, "Output .ftm path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version exit 0; every usage error maps to the invalid-argument code.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    qatm::set_worker_count(workers);
    cfg.method = kMethods.at(named.method);
    cfg.features = kSources.at(named.features);
    if (*match) {
      cfg.command = qatm::Command::kMatch;
      if (!template_ftm.empty() || !search_ftm.empty()) {
        cfg.features = qatm::FeatureSource::kFtm;
        if (!template_ftm.empty()) cfg.template_path = template_ftm;
        if (!search_ftm.empty()) cfg.search_path = search_ftm;
      }
      std::cout << qatm::run_match(cfg).json << '\n';
    } else if (*calibrate) {
      cfg.command = qatm::Command::kCalibrateAlpha;
      cfg.calibration.alpha_grid = qatm::CalibrationConfig::make_alpha_grid(alpha_min, alpha_max, alpha_step);
      cfg.calibration.estimator =
          estimator == "max" ? qatm::UnmatchedEstimator::kMaxOverTrials : qatm::UnmatchedEstimator::kMeanOfTrialMax;
      qatm::CalibrationResult result;
      if (cfg.csv_out.empty()) {
        result = qatm::run_calibrate(cfg, std::cout);
      } else {
        std::ofstream csv(cfg.csv_out);
        if (!csv) throw qatm::IoError("cannot write " + cfg.csv_out.string());
        result = qatm::run_calibrate(cfg, csv);
      }
      std::cerr << "alpha_star=" << result.alpha_star << '\n';
    } else if (*evaluate) {
      cfg.command = qatm::Command::kEvaluate;
      const auto report = qatm::run_evaluate(cfg);
      if (cfg.report.empty()) std::cout << qatm::report_to_json(report, cfg.include_timing) << '\n';
    } else if (*bench) {
      cfg.command = qatm::Command::kBench;
      for (const auto& name : bench_methods) cfg.bench_methods.push_back(kMethods.at(name));
      std::cout << qatm::run_bench(cfg) << '\n';
    } else if (*export_cmd) {
      cfg.command = qatm::Command::kExportFeatures;
      const auto map = qatm::run_export_features(cfg);
      std::cerr << "wrote " << map.height() << "x" << map.width() << "x" << map.dim() << " features to "
                << cfg.ftm_out.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "qatm: error: " << e.what() << '\n';
    return qatm::exit_code_for(e);
  }
  return 0;
}
