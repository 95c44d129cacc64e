#include "qatm/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qatm/error.hpp"
#include "qatm/features.hpp"
#include "qatm/image.hpp"
#include "qatm/pipeline.hpp"

namespace qatm {

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<double> uniform_thresholds(std::size_t n) {
  if (n < 2) throw InvalidArgument("need at least two thresholds");
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  return t;
}

SuccessCurve success_auc(std::span<const double> ious, std::span<const double> thresholds) {
  if (ious.empty()) throw InvalidArgument("success curve of an empty iou list");
  if (thresholds.empty()) throw InvalidArgument("success curve needs thresholds");
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > thresholds[i - 1])) throw InvalidArgument("thresholds must be strictly increasing");
  }
  const double n = static_cast<double>(ious.size());
  auto rate = [&](double tau, bool strict) {
    std::size_t k = 0;
    for (double v : ious) k += strict ? (v > tau) : (v >= tau);
    return static_cast<double>(k) / n;
  };

  SuccessCurve c;
  std::vector<double> integrand;
  for (double tau : thresholds) {
    c.points.emplace_back(tau, rate(tau, false));
    integrand.push_back(tau <= 0.0 ? rate(0.0, true) : c.points.back().second);
  }
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    c.auc += 0.5 * (integrand[i] + integrand[i - 1]) * (thresholds[i] - thresholds[i - 1]);
  }
  c.auc = std::clamp(c.auc, 0.0, 1.0);
  return c;
}

std::size_t DatasetManifest::count(Label label) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const ManifestEntry& e) { return e.label == label; }));
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

Box parse_box(const std::string& text, std::size_t line) {
  const auto parts = split(text, ',');
  if (parts.size() != 4) {
    throw FormatError(FormatErrorKind::kMalformed, "manifest line " + std::to_string(line) + ": bad box '" + text + "'");
  }
  Box b;
  double* fields[] = {&b.x, &b.y, &b.w, &b.h};
  for (std::size_t i = 0; i < 4; ++i) {
    try {
      std::size_t used = 0;
      *fields[i] = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError(FormatErrorKind::kMalformed, "manifest line " + std::to_string(line) + ": bad number '" + parts[i] + "'");
    }
  }
  if (b.w <= 0 || b.h <= 0) {
    throw FormatError(FormatErrorKind::kMalformed, "manifest line " + std::to_string(line) + ": empty box");
  }
  return b;
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string format_box(const Box& b) {
  return format_number(b.x) + "," + format_number(b.y) + "," + format_number(b.w) + "," + format_number(b.h);
}

std::filesystem::path resolve(const DatasetManifest& m, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || m.base_dir.empty() ? path : m.base_dir / path;
}

}  // namespace

DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  DatasetManifest m;
  m.base_dir = base_dir;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 5) {
      throw FormatError(FormatErrorKind::kMalformed,
                        "manifest line " + std::to_string(line_no) + ": expected 5 tab-separated fields");
    }
    ManifestEntry e;
    if (cols[0] == "positive") {
      e.label = Label::kPositive;
    } else if (cols[0] == "negative") {
      e.label = Label::kNegative;
    } else {
      throw FormatError(FormatErrorKind::kMalformed, "manifest line " + std::to_string(line_no) + ": bad label '" + cols[0] + "'");
    }
    e.group = cols[1];
    const auto hash = cols[2].rfind('#');
    if (hash != std::string::npos) {
      e.template_path = cols[2].substr(0, hash);
      e.template_crop = parse_box(cols[2].substr(hash + 1), line_no);
    } else {
      e.template_path = cols[2];
    }
    e.search_path = cols[3];
    if (cols[4] != "-") e.ground_truth = parse_box(cols[4], line_no);
    if (e.label == Label::kPositive && !e.ground_truth) {
      throw FormatError(FormatErrorKind::kMalformed, "manifest line " + std::to_string(line_no) + ": positive entry without box");
    }
    if (e.template_path.empty() || e.search_path.empty()) {
      throw FormatError(FormatErrorKind::kMalformed, "manifest line " + std::to_string(line_no) + ": empty path");
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

void write_manifest(const DatasetManifest& manifest, std::ostream& out) {
  for (const auto& e : manifest.entries) {
    out << (e.label == Label::kPositive ? "positive" : "negative") << '\t' << e.group << '\t' << e.template_path;
    if (e.template_crop) out << '#' << format_box(*e.template_crop);
    out << '\t' << e.search_path << '\t' << (e.ground_truth ? format_box(*e.ground_truth) : "-") << '\n';
  }
}

DatasetManifest make_negatives(const DatasetManifest& manifest, std::uint64_t seed, const ImageSizeFn& image_size) {
  const ImageSizeFn size_of = image_size ? image_size : [](const std::filesystem::path& p) {
    const auto s = read_image_size(p);
    return std::pair{s.width, s.height};
  };

  std::vector<std::string> groups;
  for (const auto& e : manifest.entries) {
    if (std::find(groups.begin(), groups.end(), e.group) == groups.end()) groups.push_back(e.group);
  }
  if (groups.size() < 2) throw InvalidArgument("negatives need at least two distinct groups");

  std::mt19937_64 rng(seed);
  DatasetManifest out;
  out.base_dir = manifest.base_dir;
  for (const auto& pos : manifest.entries) {
    if (pos.label != Label::kPositive) continue;
    std::size_t tw = 0, th = 0;
    if (pos.template_crop) {
      tw = static_cast<std::size_t>(pos.template_crop->w);
      th = static_cast<std::size_t>(pos.template_crop->h);
    } else {
      std::tie(tw, th) = size_of(resolve(manifest, pos.template_path));
    }

    struct Source {
      const ManifestEntry* entry;
      std::size_t w, h;
    };
    std::vector<Source> sources;
    for (const auto& other : manifest.entries) {
      if (other.group == pos.group) continue;
      const auto [w, h] = size_of(resolve(manifest, other.search_path));
      if (w >= tw && h >= th) sources.push_back({&other, w, h});
    }
    if (sources.empty()) {
      throw InvalidArgument("no frame from another group is large enough for a " + std::to_string(tw) + "x" +
                            std::to_string(th) + " negative template");
    }

    const Source& src = sources[std::uniform_int_distribution<std::size_t>(0, sources.size() - 1)(rng)];
    const auto x = std::uniform_int_distribution<std::size_t>(0, src.w - tw)(rng);
    const auto y = std::uniform_int_distribution<std::size_t>(0, src.h - th)(rng);

    ManifestEntry neg;
    neg.label = Label::kNegative;
    neg.group = pos.group;
    neg.template_path = src.entry->search_path;
    neg.template_crop = Box{static_cast<double>(x), static_cast<double>(y), static_cast<double>(tw),
                            static_cast<double>(th)};
    neg.search_path = pos.search_path;
    out.entries.push_back(pos);
    out.entries.push_back(std::move(neg));
  }
  return out;
}

double response_roc(std::span<const ScoredLabel> samples) {
  std::vector<ScoredLabel> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& a, const ScoredLabel& b) { return a.response < b.response; });
  double n_pos = 0.0, n_neg = 0.0, rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].response == sorted[i].response) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (sorted[k].label == Label::kPositive) {
        n_pos += 1.0;
        rank_sum_pos += avg_rank;
      } else {
        n_neg += 1.0;
      }
    }
    i = j;
  }
  if (n_pos == 0.0 || n_neg == 0.0) throw InvalidArgument("ROC needs both positive and negative samples");
  return (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

namespace {

FeatureMap load_side(const DatasetManifest& m, const std::string& path, const std::optional<Box>& crop_box,
                     const EvalOptions& o) {
  const auto full = resolve(m, path);
  if (o.features == FeatureSource::kFtm) {
    FeatureMap map = load_feature_file(full);
    if (!crop_box) return map;
    const std::size_t s = map.stride_px();
    const auto x = static_cast<std::size_t>(crop_box->x) / s;
    const auto y = static_cast<std::size_t>(crop_box->y) / s;
    const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(crop_box->w) / s);
    const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(crop_box->h) / s);
    return crop_feature_map(map, x, y, std::min(w, map.width() - x), std::min(h, map.height() - y));
  }
  Image img = load_image(full);
  if (crop_box) {
    img = crop(img, static_cast<std::size_t>(crop_box->x), static_cast<std::size_t>(crop_box->y),
               static_cast<std::size_t>(crop_box->w), static_cast<std::size_t>(crop_box->h));
  }
  if (o.grayscale) img = to_grayscale(img);
  return extract_raw_patches(img, o.patch, o.stride, o.normalize);
}

TimingStats summarize(const std::vector<double>& seconds) {
  TimingStats t;
  t.samples = seconds.size();
  if (seconds.empty()) return t;
  for (double s : seconds) t.mean_s += s;
  t.mean_s /= static_cast<double>(seconds.size());
  if (seconds.size() > 1) {
    double var = 0.0;
    for (double s : seconds) var += (s - t.mean_s) * (s - t.mean_s);
    t.std_s = std::sqrt(var / static_cast<double>(seconds.size() - 1));
  }
  return t;
}

}  // namespace

std::pair<FeatureMap, FeatureMap> load_entry_features(const DatasetManifest& manifest, const ManifestEntry& entry,
                                                      const EvalOptions& options) {
  FeatureMap t = load_side(manifest, entry.template_path, entry.template_crop, options);
  FeatureMap s = load_side(manifest, entry.search_path, std::nullopt, options);
  return {std::move(t), std::move(s)};
}

EvalReport evaluate(const DatasetManifest& manifest, const EvalOptions& options) {
  if (manifest.entries.empty()) throw InvalidArgument("manifest has no entries");
  EvalReport report;
  report.method = options.match.method;
  report.alpha = options.match.params.alpha;

  std::vector<double> ious;
  std::vector<ScoredLabel> scored;
  std::vector<double> seconds;
  for (const auto& e : manifest.entries) {
    const auto [t, s] = load_entry_features(manifest, e, options);
    const MatchOutcome m = match(t, s, options.match);
    EvalEntry r;
    r.label = e.label;
    r.predicted = m.result.window_px;
    r.mean_response = m.result.mean_score;
    r.elapsed_ms = m.result.elapsed_ms;
    if (e.label == Label::kPositive && e.ground_truth) {
      r.iou = iou(m.result.window_px, *e.ground_truth);
      ious.push_back(*r.iou);
    }
    scored.push_back({r.mean_response, r.label});
    seconds.push_back(r.elapsed_ms / 1000.0);
    report.entries.push_back(r);
  }
  if (!ious.empty()) report.success = success_auc(ious, uniform_thresholds());
  if (manifest.count(Label::kPositive) > 0 && manifest.count(Label::kNegative) > 0) {
    report.roc_auc = response_roc(scored);
  }
  report.timing = summarize(seconds);
  return report;
}

std::string report_to_json(const EvalReport& report, bool include_timing) {
  using nlohmann::json;
  json entries = json::array();
  for (const auto& e : report.entries) {
    json j = {
        {"label", e.label == Label::kPositive ? "positive" : "negative"},
        {"iou", e.iou ? json(*e.iou) : json(nullptr)},
        {"predicted_box_px", {e.predicted.x, e.predicted.y, e.predicted.w, e.predicted.h}},
        {"mean_response", e.mean_response},
    };
    if (include_timing) j["elapsed_ms"] = e.elapsed_ms;
    entries.push_back(std::move(j));
  }
  json curve = json::array();
  for (const auto& [tau, rate] : report.success.points) curve.push_back({tau, rate});

  json out = {
      {"method", std::string(to_string(report.method))},
      {"alpha", report.alpha},
      {"entries", std::move(entries)},
      {"success_curve", std::move(curve)},
      {"auc", report.success.points.empty() ? json(nullptr) : json(report.success.auc)},
      {"roc_auc", report.roc_auc ? json(*report.roc_auc) : json(nullptr)},
  };
  if (include_timing) {
    out["timing"] = {{"mean_s", report.timing.mean_s}, {"std_s", report.timing.std_s}, {"samples", report.timing.samples}};
  }
  return out.dump(2);
}

TimingStats bench(const DatasetManifest& manifest, std::size_t repetitions, const EvalOptions& options,
                  const BenchHooks& hooks) {
  if (repetitions == 0) throw InvalidArgument("bench needs at least one repetition");
  if (manifest.entries.empty()) throw InvalidArgument("manifest has no entries");
  auto emit = [&](BenchEvent ev) {
    if (hooks.on_event) hooks.on_event(ev);
  };

  std::vector<double> seconds;
  for (const auto& e : manifest.entries) {
    emit(BenchEvent::kLoadBegin);
    const auto [t, s] = load_entry_features(manifest, e, options);
    emit(BenchEvent::kLoadEnd);
    for (std::size_t r = 0; r < repetitions; ++r) {
      emit(BenchEvent::kTimedBegin);
      const auto start = std::chrono::steady_clock::now();
      [[maybe_unused]] const MatchOutcome m = match(t, s, options.match);
      const auto stop = std::chrono::steady_clock::now();
      emit(BenchEvent::kTimedEnd);
      seconds.push_back(std::chrono::duration<double>(stop - start).count());
    }
  }
  return summarize(seconds);
}

}  // namespace qatm
