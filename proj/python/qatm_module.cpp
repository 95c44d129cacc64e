#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <string>

#include "qatm/calibration.hpp"
#include "qatm/error.hpp"
#include "qatm/evaluation.hpp"
#include "qatm/features.hpp"
#include "qatm/localize.hpp"
#include "qatm/parallel.hpp"
#include "qatm/pipeline.hpp"
#include "qatm/qatm.hpp"
#include "qatm/tensor.hpp"

namespace py = pybind11;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

qatm::Tensor to_tensor(const DoubleArray& a) {
  qatm::Shape shape(a.shape(), a.shape() + a.ndim());
  return qatm::Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_numpy(const qatm::Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

qatm::FeatureMap feature_map_from_numpy(const FloatArray& a, std::uint32_t stride_px, std::uint32_t source_width,
                                        std::uint32_t source_height) {
  if (a.ndim() != 3) throw qatm::ShapeMismatch("feature array must be H x W x L");
  return qatm::FeatureMap(a.shape(0), a.shape(1), a.shape(2), std::vector<float>(a.data(), a.data() + a.size()),
                          stride_px, source_width, source_height);
}

qatm::Image image_from_numpy(const ByteArray& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw qatm::ShapeMismatch("image array must be H x W or H x W x C");
  const std::size_t c = a.ndim() == 3 ? a.shape(2) : 1;
  return qatm::Image(a.shape(1), a.shape(0), c, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

py::dict match_to_dict(const qatm::MatchOutcome& m) {
  const auto& r = m.result;
  py::dict d;
  d["box_px"] = py::make_tuple(r.window_px.x, r.window_px.y, r.window_px.w, r.window_px.h);
  d["box_grid"] = py::make_tuple(r.window_grid.x, r.window_grid.y, r.window_grid.w, r.window_grid.h);
  d["score"] = r.score;
  d["mean_score"] = r.mean_score;
  d["method"] = std::string(qatm::to_string(r.method));
  d["elapsed_ms"] = r.elapsed_ms;
  d["response"] = to_numpy(r.response.values);
  d["template_map"] = m.template_map ? py::object(to_numpy(m.template_map->values)) : py::object(py::none());
  return d;
}

qatm::Box to_box(const std::tuple<double, double, double, double>& b) {
  return {std::get<0>(b), std::get<1>(b), std::get<2>(b), std::get<3>(b)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quality-aware template matching kernels";

  const auto base = py::register_exception<qatm::Error>(m, "QatmError", PyExc_RuntimeError);
  py::register_exception<qatm::InvalidArgument>(m, "InvalidArgument", base);
  py::register_exception<qatm::ShapeMismatch>(m, "ShapeMismatch", base);
  py::register_exception<qatm::FormatError>(m, "FormatError", base);
  py::register_exception<qatm::IoError>(m, "IoError", base);

  m.attr("DEFAULT_ALPHA") = qatm::kDefaultAlpha;
  m.def("set_worker_count", &qatm::set_worker_count, py::arg("workers"));
  m.def("worker_count", &qatm::worker_count);

  py::class_<qatm::FeatureMap>(m, "FeatureMap")
      .def(py::init(&feature_map_from_numpy), py::arg("data"), py::arg("stride_px") = 1, py::arg("source_width") = 0,
           py::arg("source_height") = 0)
      .def_property_readonly("height", &qatm::FeatureMap::height)
      .def_property_readonly("width", &qatm::FeatureMap::width)
      .def_property_readonly("dim", &qatm::FeatureMap::dim)
      .def_property_readonly("stride_px", &qatm::FeatureMap::stride_px)
      .def_property_readonly("source_width", &qatm::FeatureMap::source_width)
      .def_property_readonly("source_height", &qatm::FeatureMap::source_height)
      .def("to_numpy",
           [](const qatm::FeatureMap& f) {
             py::array_t<float> out({f.height(), f.width(), f.dim()});
             std::copy(f.data().begin(), f.data().end(), out.mutable_data());
             return out;
           })
      .def("__eq__", [](const qatm::FeatureMap& a, const qatm::FeatureMap& b) { return a == b; });

  m.def("extract_raw_patches",
        [](const ByteArray& img, std::size_t patch, std::size_t stride, bool normalize) {
          return qatm::extract_raw_patches(image_from_numpy(img), patch, stride, normalize);
        },
        py::arg("image"), py::arg("patch_size"), py::arg("stride") = 1, py::arg("normalize") = true);
  m.def("load_feature_file", &qatm::load_feature_file, py::arg("path"));
  m.def("save_feature_file", &qatm::save_feature_file, py::arg("map"), py::arg("path"));

  m.def("cosine_similarity",
        [](const qatm::FeatureMap& t, const qatm::FeatureMap& s) {
          return to_numpy(qatm::cosine_similarity_tensor(t, s));
        },
        py::arg("template"), py::arg("search"));
  m.def("grouped_softmax",
        [](const DoubleArray& x, const qatm::AxisSet& axes, double alpha) {
          return to_numpy(qatm::grouped_softmax(to_tensor(x), axes, alpha));
        },
        py::arg("x"), py::arg("axes"), py::arg("alpha"));
  m.def("grouped_max",
        [](const DoubleArray& x, const qatm::AxisSet& axes) { return to_numpy(qatm::grouped_max(to_tensor(x), axes)); },
        py::arg("x"), py::arg("axes"));

  m.def("likelihoods",
        [](const DoubleArray& rho, double alpha) {
          const auto q = qatm::likelihoods(to_tensor(rho), {alpha});
          return py::make_tuple(to_numpy(q.l_t_given_s), to_numpy(q.l_s_given_t), to_numpy(q.qatm));
        },
        py::arg("rho"), py::arg("alpha") = qatm::kDefaultAlpha,
        "Returns (L(t|s), L(s|t), QATM), each shaped like rho [Ht, Wt, Hs, Ws].");
  m.def("quality_maps",
        [](const DoubleArray& rho, double alpha) {
          const auto maps = qatm::quality_maps(qatm::likelihoods(to_tensor(rho), {alpha}));
          return py::make_tuple(to_numpy(maps.search.values), to_numpy(maps.templ.values));
        },
        py::arg("rho"), py::arg("alpha") = qatm::kDefaultAlpha, "Returns (search_map, template_map).");
  m.def("grad_alpha",
        [](const DoubleArray& rho, double alpha) { return to_numpy(qatm::qatm_grad_alpha(to_tensor(rho), {alpha})); },
        py::arg("rho"), py::arg("alpha") = qatm::kDefaultAlpha);
  m.def("grad_rho",
        [](const DoubleArray& rho, double alpha, const DoubleArray& upstream) {
          return to_numpy(qatm::qatm_grad_rho(to_tensor(rho), {alpha}, to_tensor(upstream)));
        },
        py::arg("rho"), py::arg("alpha"), py::arg("upstream"));

  m.def("best_window",
        [](const DoubleArray& map, std::size_t w, std::size_t h) {
          if (map.ndim() != 2) throw qatm::ShapeMismatch("map must be two-dimensional");
          const auto r = qatm::best_window({to_tensor(map), qatm::MapSide::kSearch}, w, h);
          return py::make_tuple(r.window_grid.x, r.window_grid.y, r.score);
        },
        py::arg("map"), py::arg("w"), py::arg("h"), "Returns (x, y, score) of the best window.");

  m.def("match",
        [](const qatm::FeatureMap& t, const qatm::FeatureMap& s, const std::string& method, double alpha) {
          return match_to_dict(qatm::match(t, s, {qatm::parse_method(method), {alpha}}));
        },
        py::arg("template"), py::arg("search"), py::arg("method") = "qatm", py::arg("alpha") = qatm::kDefaultAlpha);

  m.def("calibrate_alpha",
        [](double mu_plus, double sigma_plus, double mu_minus, double sigma_minus, std::size_t n_patches,
           std::size_t n_trials, const std::vector<double>& grid, std::uint64_t seed, const std::string& estimator) {
          qatm::CalibrationConfig cfg;
          cfg.mu_plus = mu_plus;
          cfg.sigma_plus = sigma_plus;
          cfg.mu_minus = mu_minus;
          cfg.sigma_minus = sigma_minus;
          cfg.n_patches = n_patches;
          cfg.n_trials = n_trials;
          if (!grid.empty()) cfg.alpha_grid = grid;
          cfg.rng_seed = seed;
          if (estimator == "mean") {
            cfg.estimator = qatm::UnmatchedEstimator::kMeanOfTrialMax;
          } else if (estimator != "max") {
            throw qatm::InvalidArgument("estimator must be 'max' or 'mean'");
          }
          const auto r = qatm::calibrate_alpha(cfg);
          py::array_t<double> curve({r.curve.size(), std::size_t{2}});
          auto v = curve.mutable_unchecked<2>();
          for (std::size_t i = 0; i < r.curve.size(); ++i) {
            v(i, 0) = r.curve[i].alpha;
            v(i, 1) = r.curve[i].discernibility;
          }
          return py::make_tuple(r.alpha_star, curve);
        },
        py::arg("mu_plus") = 0.3, py::arg("sigma_plus") = 0.1, py::arg("mu_minus") = 0.0,
        py::arg("sigma_minus") = 0.05, py::arg("n_patches") = 2200, py::arg("n_trials") = 200,
        py::arg("alpha_grid") = std::vector<double>{}, py::arg("seed") = 0, py::arg("estimator") = "max",
        "Returns (alpha_star, curve) where curve rows are (alpha, discernibility).");

  m.def("iou",
        [](const std::tuple<double, double, double, double>& a, const std::tuple<double, double, double, double>& b) {
          return qatm::iou(to_box(a), to_box(b));
        },
        py::arg("a"), py::arg("b"));
  m.def("response_roc",
        [](const std::vector<double>& positives, const std::vector<double>& negatives) {
          std::vector<qatm::ScoredLabel> samples;
          for (double v : positives) samples.push_back({v, qatm::Label::kPositive});
          for (double v : negatives) samples.push_back({v, qatm::Label::kNegative});
          return qatm::response_roc(samples);
        },
        py::arg("positives"), py::arg("negatives"));
}
