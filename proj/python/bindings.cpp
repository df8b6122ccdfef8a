// Python bindings for the core operations: distances, the optimizer, the
// descriptor pipeline, synthetic data, and the evaluation protocol.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tdl/dataset.hpp"
#include "tdl/errors.hpp"
#include "tdl/evaluation.hpp"
#include "tdl/experiment.hpp"
#include "tdl/features.hpp"
#include "tdl/image.hpp"
#include "tdl/metric.hpp"
#include "tdl/optimizer.hpp"

namespace py = pybind11;
using namespace tdl;

namespace {

std::vector<Image> video_from_array(const py::array_t<std::uint8_t>& frames) {
  if (frames.ndim() != 4 || frames.shape(3) != 3) {
    throw InvalidInputError("expected a uint8 array of shape (frames, height, width, 3)");
  }
  const auto view = frames.unchecked<4>();
  std::vector<Image> video(static_cast<std::size_t>(view.shape(0)));
  for (py::ssize_t t = 0; t < view.shape(0); ++t) {
    Image& img = video[static_cast<std::size_t>(t)];
    img.height = static_cast<int>(view.shape(1));
    img.width = static_cast<int>(view.shape(2));
    img.pixels.resize(static_cast<std::size_t>(img.height) * img.width * 3);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = view(t, y, x, c);
      }
    }
  }
  return video;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Top-push distance learning for video-based person re-identification";

  py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidInputError>(m, "InvalidInputError", PyExc_ValueError);

  py::class_<LabeledSample>(m, "LabeledSample")
      .def(py::init([](const Eigen::VectorXd& feature, std::string person_id,
                       std::string camera_id) {
             return LabeledSample{feature, std::move(person_id), std::move(camera_id)};
           }),
           py::arg("feature"), py::arg("person_id"), py::arg("camera_id"))
      .def_readwrite("feature", &LabeledSample::feature)
      .def_readwrite("person_id", &LabeledSample::person_id)
      .def_readwrite("camera_id", &LabeledSample::camera_id)
      .def("__repr__", [](const LabeledSample& s) {
        return "LabeledSample(person_id='" + s.person_id + "', camera_id='" + s.camera_id +
               "', dim=" + std::to_string(s.feature.size()) + ")";
      });

  py::class_<MetricMatrix>(m, "MetricMatrix")
      .def(py::init<Eigen::MatrixXd>(), py::arg("matrix"))
      .def_static("identity", &MetricMatrix::identity, py::arg("dim"))
      .def_property_readonly("matrix", &MetricMatrix::mat)
      .def_property_readonly("dim", &MetricMatrix::dim);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("alpha", &TrainConfig::alpha)
      .def_readwrite("rho", &TrainConfig::rho)
      .def_readwrite("lambda0", &TrainConfig::lambda0)
      .def_readwrite("lambda_up", &TrainConfig::lambda_up)
      .def_readwrite("lambda_down", &TrainConfig::lambda_down)
      .def_readwrite("max_iters", &TrainConfig::max_iters)
      .def_readwrite("rel_tol", &TrainConfig::rel_tol)
      .def_readwrite("lambda_floor", &TrainConfig::lambda_floor)
      .def_readwrite("rng_seed", &TrainConfig::rng_seed)
      .def_readwrite("anchor_fraction", &TrainConfig::anchor_fraction)
      .def("validate", &TrainConfig::validate);

  py::class_<Triplet>(m, "Triplet")
      .def_readonly("anchor", &Triplet::anchor)
      .def_readonly("positive", &Triplet::positive)
      .def_readonly("negative", &Triplet::negative);

  py::class_<AnchorMin>(m, "AnchorMin")
      .def_readonly("has", &AnchorMin::has)
      .def_readonly("negative", &AnchorMin::negative)
      .def_readonly("distance", &AnchorMin::distance);

  py::class_<TriggeredSet>(m, "TriggeredSet")
      .def_readonly("triplets", &TriggeredSet::triplets)
      .def_readonly("anchor_min", &TriggeredSet::anchor_min);

  py::class_<TrainReport>(m, "TrainReport")
      .def_readonly("final_metric", &TrainReport::final_metric)
      .def_readonly("loss_trace", &TrainReport::loss_trace)
      .def_readonly("lambda_trace", &TrainReport::lambda_trace)
      .def_readonly("iters_run", &TrainReport::iters_run)
      .def_readonly("converged", &TrainReport::converged);

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("num_identities", &SynthConfig::num_identities)
      .def_readwrite("samples_per_identity", &SynthConfig::samples_per_identity)
      .def_readwrite("dim", &SynthConfig::dim)
      .def_readwrite("informative_dim", &SynthConfig::informative_dim)
      .def_readwrite("intra_class_noise_scale", &SynthConfig::intra_class_noise_scale)
      .def_readwrite("inter_class_separation", &SynthConfig::inter_class_separation)
      .def_readwrite("distractor_noise_scale", &SynthConfig::distractor_noise_scale)
      .def_readwrite("rng_seed", &SynthConfig::rng_seed);

  py::class_<FeatureStore>(m, "FeatureStore")
      .def(py::init<>())
      .def_readwrite("preset_name", &FeatureStore::preset_name)
      .def_readwrite("preset_hash", &FeatureStore::preset_hash)
      .def_readwrite("source_hash", &FeatureStore::source_hash)
      .def_readwrite("dim", &FeatureStore::dim)
      .def_readwrite("records", &FeatureStore::records)
      .def("identities", &FeatureStore::identities)
      .def("cameras", &FeatureStore::cameras);

  py::class_<TrialSplit>(m, "TrialSplit")
      .def_readonly("train_ids", &TrialSplit::train_ids)
      .def_readonly("test_ids", &TrialSplit::test_ids)
      .def_readonly("seed", &TrialSplit::seed);

  py::class_<CmcCurve>(m, "CmcCurve")
      .def_readonly("rates", &CmcCurve::rates);

  py::enum_<Method>(m, "Method")
      .value("TDL", Method::Tdl)
      .value("EUCLIDEAN", Method::Euclidean)
      .value("L1NORM", Method::L1Norm);

  py::enum_<Direction>(m, "Direction")
      .value("FORWARD", Direction::Forward)
      .value("REVERSE", Direction::Reverse);

  py::class_<ProtocolConfig>(m, "ProtocolConfig")
      .def(py::init<>())
      .def_readwrite("num_trials", &ProtocolConfig::num_trials)
      .def_readwrite("seed", &ProtocolConfig::seed)
      .def_readwrite("direction", &ProtocolConfig::direction);

  py::class_<BenchmarkReport>(m, "BenchmarkReport")
      .def_readonly("method", &BenchmarkReport::method)
      .def_readonly("per_trial", &BenchmarkReport::per_trial)
      .def_readonly("mean_curve", &BenchmarkReport::mean_curve)
      .def_readonly("per_trial_auc", &BenchmarkReport::per_trial_auc)
      .def_readonly("mean_auc", &BenchmarkReport::mean_auc)
      .def_readonly("rank_rates", &BenchmarkReport::rank_rates)
      .def_readonly("num_identities_used", &BenchmarkReport::num_identities_used)
      .def_readonly("probe_camera", &BenchmarkReport::probe_camera)
      .def_readonly("gallery_camera", &BenchmarkReport::gallery_camera);

  py::class_<VideoDescriptor>(m, "VideoDescriptor")
      .def_readonly("appearance", &VideoDescriptor::appearance)
      .def_readonly("spacetime", &VideoDescriptor::spacetime)
      .def_readonly("combined", &VideoDescriptor::combined);

  py::class_<DescriptorPreset>(m, "DescriptorPreset")
      .def(py::init<>())
      .def_readwrite("name", &DescriptorPreset::name)
      .def_readwrite("frame_height", &DescriptorPreset::frame_height)
      .def_readwrite("frame_width", &DescriptorPreset::frame_width)
      .def_readwrite("patch_height", &DescriptorPreset::patch_height)
      .def_readwrite("patch_width", &DescriptorPreset::patch_width)
      .def_readwrite("patch_overlap", &DescriptorPreset::patch_overlap)
      .def("appearance_dim", &DescriptorPreset::appearance_dim)
      .def("spacetime_dim", &DescriptorPreset::spacetime_dim)
      .def("combined_dim", &DescriptorPreset::combined_dim)
      .def("content_hash", &DescriptorPreset::content_hash);

  // core-metric operations
  m.def("pairwise_diff_outer", &pairwise_diff_outer, py::arg("xi"), py::arg("xj"));
  m.def("mahalanobis_distance", &mahalanobis_distance, py::arg("metric"), py::arg("xi"),
        py::arg("xj"));
  m.def("trace_form_distance", &trace_form_distance, py::arg("metric"), py::arg("xij"));

  // optimizer operations
  m.def("min_interclass_distance", &min_interclass_distance, py::arg("metric"),
        py::arg("samples"), py::arg("anchor"));
  m.def("objective", &objective, py::arg("metric"), py::arg("samples"), py::arg("config"));
  m.def("triggered_set", &triggered_set, py::arg("metric"), py::arg("samples"), py::arg("rho"));
  m.def("positive_pair_outer_sum", &positive_pair_outer_sum, py::arg("samples"));
  m.def("gradient",
        py::overload_cast<const std::vector<LabeledSample>&, const TrainConfig&,
                          const TriggeredSet&>(&gradient),
        py::arg("samples"), py::arg("config"), py::arg("triggered"));
  m.def("psd_project", &psd_project, py::arg("matrix"));
  m.def("train", &train, py::arg("samples"), py::arg("config") = TrainConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def("decompose_projection", &decompose_projection, py::arg("metric"), py::arg("out_dim"));

  // features
  m.def(
      "video_descriptor",
      [](const py::array_t<std::uint8_t>& frames, const DescriptorPreset& preset) {
        return video_descriptor(video_from_array(frames), preset);
      },
      py::arg("frames"), py::arg("preset") = DescriptorPreset{},
      "Compute the combined descriptor from a (frames, height, width, 3) uint8 array");
  m.def(
      "patch_count",
      [](const DescriptorPreset& p) {
        return build_patch_grid(p.frame_height, p.frame_width, p.patch_height, p.patch_width,
                                p.patch_overlap)
            .rects.size();
      },
      py::arg("preset") = DescriptorPreset{});

  // dataset-io
  m.def("generate_synthetic", &generate_synthetic, py::arg("config"));
  m.def("synthetic_store", &synthetic_store, py::arg("config"));
  m.def("save_store", &save_store, py::arg("store"), py::arg("path"));
  m.def("load_store", &load_store, py::arg("path"));
  m.def("save_metric", &save_metric, py::arg("metric"), py::arg("path"));
  m.def("load_metric", &load_metric, py::arg("path"));

  // evaluation
  m.def("make_splits", &make_splits, py::arg("identities"), py::arg("num_trials"),
        py::arg("seed"));
  m.def("rank_gallery", &rank_gallery, py::arg("metric"), py::arg("probe"), py::arg("gallery"));
  m.def("l1_rank_gallery", &l1_rank_gallery, py::arg("probe"), py::arg("gallery"));
  m.def("cmc", &cmc, py::arg("metric"), py::arg("probes"), py::arg("gallery"));
  m.def("cmc_l1", &cmc_l1, py::arg("probes"), py::arg("gallery"));
  m.def("auc_cmc", &auc_cmc, py::arg("curve"));
  m.def("run_benchmark", &run_benchmark, py::arg("store"), py::arg("method"),
        py::arg("protocol") = ProtocolConfig{}, py::arg("train_config") = TrainConfig{},
        py::call_guard<py::gil_scoped_release>());

  m.attr("__version__") = "0.1.0";
}
