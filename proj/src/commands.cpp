#include "qatm/commands.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "qatm/error.hpp"
#include "qatm/features.hpp"
#include "qatm/heatmap.hpp"
#include "qatm/image.hpp"

namespace qatm {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

FeatureMap load_match_input(const std::filesystem::path& path, const RunConfig& cfg) {
  if (cfg.features == FeatureSource::kFtm) return load_feature_file(path);
  Image img = load_image(path);
  if (cfg.grayscale) img = to_grayscale(img);
  return extract_raw_patches(img, cfg.patch, cfg.stride, cfg.normalize);
}

nlohmann::json box_json(double x, double y, double w, double h) { return {x, y, w, h}; }

}  // namespace

void RunConfig::validate() const {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (patch == 0 || stride == 0) throw InvalidArgument("patch and stride must be positive");
  switch (command) {
    case Command::kMatch:
      if (template_path.empty() || search_path.empty()) throw InvalidArgument("match needs a template and a search input");
      break;
    case Command::kEvaluate:
    case Command::kBench:
      if (manifest.empty()) throw InvalidArgument("a manifest is required");
      if (command == Command::kBench && repetitions == 0) throw InvalidArgument("repetitions must be at least 1");
      break;
    case Command::kCalibrateAlpha:
      calibration.validate();
      break;
    case Command::kExportFeatures:
      if (image.empty() || ftm_out.empty()) throw InvalidArgument("export-features needs --image and --out");
      break;
  }
}

EvalOptions RunConfig::eval_options() const {
  EvalOptions o;
  o.match.method = method;
  o.match.params.alpha = alpha;
  o.features = features;
  o.patch = patch;
  o.stride = stride;
  o.normalize = normalize;
  o.grayscale = grayscale;
  return o;
}

MatchRun run_match(const RunConfig& cfg) {
  cfg.validate();
  const FeatureMap templ = load_match_input(cfg.template_path, cfg);
  const FeatureMap search = load_match_input(cfg.search_path, cfg);

  MatchRun run;
  run.outcome = match(templ, search, cfg.eval_options().match);
  const MatchResult& r = run.outcome.result;

  nlohmann::json j = {
      {"box_px", box_json(r.window_px.x, r.window_px.y, r.window_px.w, r.window_px.h)},
      {"box_grid", {r.window_grid.x, r.window_grid.y, r.window_grid.w, r.window_grid.h}},
      {"score", r.score},
      {"mean_score", r.mean_score},
      {"method", std::string(to_string(r.method))},
      {"alpha", cfg.alpha},
      {"stride_px", search.stride_px()},
  };
  if (cfg.include_timing) j["elapsed_ms"] = r.elapsed_ms;
  run.json = j.dump(2);

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    write_text(cfg.out_dir / "result.json", run.json);
    if (cfg.heatmaps) {
      write_heatmap(r.response, search.stride_px(), cfg.out_dir / "search_map.pgm");
      if (run.outcome.template_map) {
        write_heatmap(*run.outcome.template_map, templ.stride_px(), cfg.out_dir / "template_map.pgm");
      }
    }
  }
  return run;
}

CalibrationResult run_calibrate(const RunConfig& cfg, std::ostream& csv) {
  cfg.validate();
  CalibrationConfig cal = cfg.calibration;
  cal.rng_seed = cfg.seed;
  const CalibrationResult result = calibrate_alpha(cal);
  csv << "alpha,discernibility\n";
  const auto old_precision = csv.precision(10);
  for (const auto& p : result.curve) csv << p.alpha << ',' << p.discernibility << '\n';
  csv.precision(old_precision);
  return result;
}

EvalReport run_evaluate(const RunConfig& cfg) {
  cfg.validate();
  DatasetManifest manifest = read_manifest(cfg.manifest);
  if (cfg.add_negatives) manifest = make_negatives(manifest, cfg.seed);
  EvalReport report = evaluate(manifest, cfg.eval_options());
  if (!cfg.report.empty()) write_text(cfg.report, report_to_json(report, cfg.include_timing));
  return report;
}

std::string run_bench(const RunConfig& cfg) {
  cfg.validate();
  DatasetManifest manifest = read_manifest(cfg.manifest);
  if (cfg.add_negatives) manifest = make_negatives(manifest, cfg.seed);
  const std::vector<Method> methods = cfg.bench_methods.empty() ? std::vector<Method>{cfg.method} : cfg.bench_methods;

  nlohmann::json rows = nlohmann::json::array();
  for (Method m : methods) {
    EvalOptions o = cfg.eval_options();
    o.match.method = m;
    const TimingStats t = bench(manifest, cfg.repetitions, o);
    rows.push_back({{"method", std::string(to_string(m))}, {"mean_s", t.mean_s}, {"std_s", t.std_s}, {"samples", t.samples}});
  }
  const nlohmann::json out = {{"repetitions", cfg.repetitions}, {"alpha", cfg.alpha}, {"methods", std::move(rows)}};
  std::string text = out.dump(2);
  if (!cfg.report.empty()) write_text(cfg.report, text);
  return text;
}

FeatureMap run_export_features(const RunConfig& cfg) {
  cfg.validate();
  Image img = load_image(cfg.image);
  if (cfg.grayscale) img = to_grayscale(img);
  FeatureMap map = extract_raw_patches(img, cfg.patch, cfg.stride, cfg.normalize);
  if (cfg.ftm_out.has_parent_path()) std::filesystem::create_directories(cfg.ftm_out.parent_path());
  save_feature_file(map, cfg.ftm_out);
  return map;
}

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const InvalidArgument*>(&e)) return 2;
  if (dynamic_cast<const IoError*>(&e)) return 3;
  if (dynamic_cast<const FormatError*>(&e)) return 4;
  if (dynamic_cast<const ShapeMismatch*>(&e)) return 5;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return 3;
  return 1;
}

}  // namespace qatm
