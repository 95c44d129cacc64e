#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "qatm/commands.hpp"
#include "qatm/error.hpp"
#include "qatm/features.hpp"
#include "qatm/image.hpp"
#include "support/dataset.hpp"
#include "support/temp_dir.hpp"

using namespace qatm;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI with stdout/stderr captured to files in dir; returns the exit status.
int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = std::string("'") + QATM_CLI_PATH + "' " + args + " >'" + (dir / "stdout.txt").string() +
                          "' 2>'" + (dir / "stderr.txt").string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Scene {
  test::TempDir dir;
  Box truth;
  Scene() {
    const auto s = test::make_planted_scene(2);
    truth = s.ground_truth;
    save_png(s.search, dir.path() / "search.png");
    save_pnm(s.positive_template, dir.path() / "template.pgm");
  }
  fs::path path(const char* name) const { return dir.path() / name; }
};

}  // namespace

TEST_CASE("run_match writes result and heatmaps") {
  Scene sc;
  RunConfig cfg;
  cfg.template_path = sc.path("template.pgm");
  cfg.search_path = sc.path("search.png");
  cfg.patch = 5;
  cfg.out_dir = sc.path("out");
  cfg.heatmaps = true;
  const MatchRun run = run_match(cfg);
  const auto j = nlohmann::json::parse(slurp(sc.path("out") / "result.json"));
  CHECK(j["box_px"][0] == sc.truth.x);
  CHECK(j["box_px"][1] == sc.truth.y);
  CHECK(j["box_px"][2] == 16);
  CHECK(j["method"] == "qatm");
  CHECK(j["alpha"] == 28.4);
  CHECK(j.contains("elapsed_ms"));

  const Image heat = load_image(sc.path("out") / "search_map.pgm");
  CHECK(heat.width == 60);
  CHECK(heat.height == 60);
  std::uint8_t lo = 255, hi = 0;
  for (auto v : heat.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == 0);
  CHECK(hi == 255);
  const auto side = nlohmann::json::parse(slurp(sc.path("out") / "search_map.pgm.json"));
  CHECK(side["width"] == 60);
  const auto values = run.outcome.result.response.values.data();
  CHECK(side["max"].get<double>() == *std::max_element(values.begin(), values.end()));
  CHECK(side["min"].get<double>() == *std::min_element(values.begin(), values.end()));
  CHECK(side["side"] == "search");
  CHECK(fs::exists(sc.path("out") / "template_map.pgm"));
}

TEST_CASE("run_match without timing is byte-reproducible") {
  Scene sc;
  RunConfig cfg;
  cfg.template_path = sc.path("template.pgm");
  cfg.search_path = sc.path("search.png");
  cfg.include_timing = false;
  for (Method m : {Method::kQatm, Method::kNcc}) {
    cfg.method = m;
    const std::string a = run_match(cfg).json;
    CHECK(a == run_match(cfg).json);
    CHECK(a.find("elapsed") == std::string::npos);
  }
}

TEST_CASE("run_calibrate writes a csv") {
  RunConfig cfg;
  cfg.command = Command::kCalibrateAlpha;
  cfg.calibration.n_patches = 50;
  cfg.calibration.n_trials = 10;
  cfg.calibration.alpha_grid = {1, 2, 3};
  std::ostringstream csv;
  const auto r = run_calibrate(cfg, csv);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "alpha,discernibility");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 3);
  CHECK(r.curve.size() == 3);
}

TEST_CASE("run_export_features round trips through match") {
  Scene sc;
  RunConfig cfg;
  cfg.command = Command::kExportFeatures;
  cfg.image = sc.path("search.png");
  cfg.ftm_out = sc.path("search.ftm");
  cfg.patch = 4;
  cfg.stride = 2;
  const FeatureMap exported = run_export_features(cfg);
  CHECK(load_feature_file(cfg.ftm_out) == exported);
  CHECK(exported.stride_px() == 2);
  CHECK(exported.source_width() == 64);
}

TEST_CASE("run_evaluate and run_bench") {
  test::TempDir dir;
  test::write_planted_dataset(dir.path(), 3);
  RunConfig cfg;
  cfg.command = Command::kEvaluate;
  cfg.manifest = dir.path() / "manifest.tsv";
  cfg.report = dir.path() / "report.json";
  cfg.add_negatives = true;
  cfg.patch = 5;
  const EvalReport r = run_evaluate(cfg);
  CHECK(r.entries.size() == 6);
  const auto j = nlohmann::json::parse(slurp(cfg.report));
  CHECK(j["auc"].get<double>() == doctest::Approx(1.0));
  CHECK(j["roc_auc"].get<double>() == 1.0);

  cfg.command = Command::kBench;
  cfg.repetitions = 1;
  cfg.report.clear();
  cfg.bench_methods = {Method::kQatm, Method::kSsd};
  const auto b = nlohmann::json::parse(run_bench(cfg));
  REQUIRE(b["methods"].size() == 2);
  CHECK(b["methods"][1]["method"] == "ssd");
  CHECK(b["methods"][0]["samples"] == 6);
}

TEST_CASE("config validation") {
  RunConfig cfg;
  cfg.alpha = -1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = RunConfig{};
  cfg.stride = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("exit codes by error class") {
  CHECK(exit_code_for(InvalidArgument("x")) == 2);
  CHECK(exit_code_for(IoError("x")) == 3);
  CHECK(exit_code_for(FormatError(FormatErrorKind::kBadMagic, "x")) == 4);
  CHECK(exit_code_for(ShapeMismatch("x")) == 5);
  CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_SUITE("binary") {
  TEST_CASE("match prints json and reproduces without timing") {
    Scene sc;
    const std::string args = "match --template '" + sc.path("template.pgm").string() + "' --search '" +
                             sc.path("search.png").string() + "' --patch 5 --omit-timing";
    REQUIRE(run_cli(args, sc.dir.path()) == 0);
    const std::string first = slurp(sc.path("stdout.txt"));
    REQUIRE(run_cli("--workers 3 " + args, sc.dir.path()) == 0);
    CHECK(slurp(sc.path("stdout.txt")) == first);
    const auto j = nlohmann::json::parse(first);
    CHECK(j["box_px"][0] == sc.truth.x);
  }

  TEST_CASE("feature files through export-features and match") {
    Scene sc;
    REQUIRE(run_cli("export-features --image '" + sc.path("search.png").string() + "' --out '" +
                        sc.path("s.ftm").string() + "' --patch 3",
                    sc.dir.path()) == 0);
    REQUIRE(run_cli("export-features --image '" + sc.path("template.pgm").string() + "' --out '" +
                        sc.path("t.ftm").string() + "' --patch 3",
                    sc.dir.path()) == 0);
    REQUIRE(run_cli("match --template-ftm '" + sc.path("t.ftm").string() + "' --search-ftm '" +
                        sc.path("s.ftm").string() + "'",
                    sc.dir.path()) == 0);
    const auto j = nlohmann::json::parse(slurp(sc.path("stdout.txt")));
    CHECK(j["box_px"][0] == sc.truth.x);
    CHECK(j["box_px"][1] == sc.truth.y);
  }

  TEST_CASE("calibrate-alpha") {
    test::TempDir dir;
    REQUIRE(run_cli("calibrate-alpha --n-patches 100 --trials 5 --alpha-min 1 --alpha-max 5 --alpha-step 1 --out '" +
                        (dir.path() / "c.csv").string() + "'",
                    dir.path()) == 0);
    CHECK(slurp(dir.path() / "c.csv").rfind("alpha,discernibility\n", 0) == 0);
    CHECK(slurp(dir.path() / "stderr.txt").find("alpha_star=") != std::string::npos);
  }

  TEST_CASE("error exit codes") {
    Scene sc;
    const std::string search = " --search '" + sc.path("search.png").string() + "'";
    CHECK(run_cli("match --template /nonexistent.png" + search, sc.dir.path()) == 3);
    CHECK(slurp(sc.path("stderr.txt")).rfind("qatm: error: ", 0) == 0);
    {
      std::ofstream junk(sc.path("junk.png"), std::ios::binary);
      junk << "not an image";
    }
    CHECK(run_cli("match --template '" + sc.path("junk.png").string() + "'" + search, sc.dir.path()) == 4);
    CHECK(run_cli("match --alpha -3 --template '" + sc.path("template.pgm").string() + "'" + search,
                  sc.dir.path()) == 2);
    CHECK(run_cli("match --method sad", sc.dir.path()) == 2);
    CHECK(run_cli("", sc.dir.path()) == 2);
    CHECK(run_cli("--help", sc.dir.path()) == 0);

    // A colour template against grayscale features has a different dimension.
    save_png(Image(8, 8, 3, 9), sc.path("colour.png"));
    CHECK(run_cli("match --template '" + sc.path("colour.png").string() + "'" + search, sc.dir.path()) == 5);
  }
}
