#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qatm/feature_map.hpp"
#include "qatm/geometry.hpp"
#include "qatm/localize.hpp"
#include "qatm/pipeline.hpp"
#include "qatm/qatm.hpp"

namespace qatm {

/// Intersection over union; 0 for disjoint or degenerate boxes.
double iou(const Box& a, const Box& b);

struct SuccessCurve {
  std::vector<std::pair<double, double>> points;  // (threshold, fraction of ious >= threshold)
  double auc = 0.0;
};

/// Success rate at each threshold and its trapezoidal area. The reported
/// rate at tau = 0 is 1 (every iou >= 0), but the integral uses the curve's
/// right limit there, so a set of all-zero ious has area 0.
SuccessCurve success_auc(std::span<const double> ious, std::span<const double> thresholds);

/// n evenly spaced thresholds covering [0, 1].
std::vector<double> uniform_thresholds(std::size_t n = 101);

enum class Label { kPositive, kNegative };

/// One (template, search) pair. Paths are resolved relative to the manifest.
/// A template may be a sub-rectangle of a larger image ("path#x,y,w,h").
struct ManifestEntry {
  Label label = Label::kPositive;
  std::string group;
  std::string template_path;
  std::optional<Box> template_crop;
  std::string search_path;
  std::optional<Box> ground_truth;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Tab-separated, one entry per line:
///   label <TAB> group <TAB> template[#x,y,w,h] <TAB> search <TAB> x,y,w,h|-
/// Blank lines and lines starting with '#' are ignored.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::size_t count(Label label) const;
  friend bool operator==(const DatasetManifest& a, const DatasetManifest& b) { return a.entries == b.entries; }
};

DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, std::ostream& out);

/// Size lookup for an image path (already resolved against the base dir).
using ImageSizeFn = std::function<std::pair<std::size_t, std::size_t>(const std::filesystem::path&)>;

/// For every positive, adds a negative that keeps its search image and takes
/// as template a random crop, of the positive template's size, from the
/// search image of an entry in a different group. Output order: each
/// positive followed by its negative. Deterministic in seed.
DatasetManifest make_negatives(const DatasetManifest& manifest, std::uint64_t seed,
                               const ImageSizeFn& image_size = {});

struct ScoredLabel {
  double response = 0.0;
  Label label = Label::kPositive;
};

/// Area under the ROC curve through the Mann-Whitney statistic (ties count 1/2).
double response_roc(std::span<const ScoredLabel> samples);

enum class FeatureSource { kRaw, kFtm };

struct EvalOptions {
  MatchOptions match;
  FeatureSource features = FeatureSource::kRaw;
  std::size_t patch = 3;
  std::size_t stride = 1;
  bool normalize = true;
  bool grayscale = false;
};

struct EvalEntry {
  Label label = Label::kPositive;
  std::optional<double> iou;
  Box predicted;
  double mean_response = 0.0;
  double elapsed_ms = 0.0;
};

struct TimingStats {
  double mean_s = 0.0;
  double std_s = 0.0;
  std::size_t samples = 0;
};

struct EvalReport {
  Method method = Method::kQatm;
  double alpha = kDefaultAlpha;
  std::vector<EvalEntry> entries;
  SuccessCurve success;
  std::optional<double> roc_auc;
  TimingStats timing;
};

/// Loads one entry's template and search features (crop applied).
std::pair<FeatureMap, FeatureMap> load_entry_features(const DatasetManifest& manifest, const ManifestEntry& entry,
                                                      const EvalOptions& options);

/// Matches every entry in manifest order. The success curve uses positive
/// entries; roc_auc is set when both labels are present.
EvalReport evaluate(const DatasetManifest& manifest, const EvalOptions& options);

/// JSON rendering of a report. With include_timing unset, all wall-clock
/// fields are omitted so that reports are byte-reproducible.
std::string report_to_json(const EvalReport& report, bool include_timing = true);

enum class BenchEvent { kLoadBegin, kLoadEnd, kTimedBegin, kTimedEnd };

struct BenchHooks {
  std::function<void(BenchEvent)> on_event;
};

/// Times repeated matching of every manifest entry. Loading and feature
/// extraction happen outside the timed region; each timed sample covers
/// similarity, scoring and localisation only.
TimingStats bench(const DatasetManifest& manifest, std::size_t repetitions, const EvalOptions& options,
                  const BenchHooks& hooks = {});

}  // namespace qatm
