// Python bindings. Frames cross the boundary as float64 arrays of shape
// (H, W, 3); clips as (T, H, W, 3). Structured values (specs, plans,
// configs, manifests) cross as JSON text and are decoded in __init__.py.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "vdegrade/analysis.hpp"
#include "vdegrade/cli.hpp"
#include "vdegrade/error.hpp"
#include "vdegrade/io.hpp"
#include "vdegrade/metrics.hpp"
#include "vdegrade/pipeline.hpp"
#include "vdegrade/serialization.hpp"

namespace py = pybind11;
using namespace vdegrade;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Frame frame_from_array(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != kChannels) throw ShapeError("expected an array of shape (H, W, 3)");
  Frame f(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::memcpy(f.samples().data(), a.data(), f.samples().size() * sizeof(double));
  return f;
}

Array frame_to_array(const Frame& f) {
  Array a({static_cast<py::ssize_t>(f.height()), static_cast<py::ssize_t>(f.width()), py::ssize_t{kChannels}});
  std::memcpy(a.mutable_data(), f.samples().data(), f.samples().size() * sizeof(double));
  return a;
}

Clip clip_from_array(const Array& a) {
  if (a.ndim() == 3) return Clip({frame_from_array(a)});
  if (a.ndim() != 4 || a.shape(3) != kChannels) throw ShapeError("expected an array of shape (T, H, W, 3)");
  const auto t = a.shape(0), h = a.shape(1), w = a.shape(2);
  const std::size_t per = static_cast<std::size_t>(h * w * kChannels);
  std::vector<Frame> frames;
  for (py::ssize_t i = 0; i < t; ++i) {
    Frame f(static_cast<int>(h), static_cast<int>(w));
    std::memcpy(f.samples().data(), a.data() + i * per, per * sizeof(double));
    frames.push_back(std::move(f));
  }
  return Clip(std::move(frames));
}

Array clip_to_array(const Clip& c) {
  Array a({static_cast<py::ssize_t>(c.length()), static_cast<py::ssize_t>(c.height()),
           static_cast<py::ssize_t>(c.width()), py::ssize_t{kChannels}});
  const std::size_t per = static_cast<std::size_t>(c.height()) * c.width() * kChannels;
  for (std::size_t i = 0; i < c.length(); ++i) {
    std::memcpy(a.mutable_data() + i * per, c[i].samples().data(), per * sizeof(double));
  }
  return a;
}

PipelineConfig config_from_text(const std::string& text) {
  return text.empty() ? PipelineConfig{} : config_from_json(Json::parse(text));
}

py::dict stats_to_dict(const ResidualStats& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["variance"] = s.variance;
  d["std"] = s.std;
  d["histogram"] = s.histogram;
  d["sample_count"] = s.sample_count;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Seedable video degradation pipeline (native core)";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<EnvironmentError>(m, "EnvironmentError", base.ptr());
  py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
  py::register_exception<ModelError>(m, "ModelError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<StageError>(m, "StageError", base.ptr());

  m.def("degradation_types", [] {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < kDegradationTypeCount; ++i) names.emplace_back(to_string(static_cast<DegradationType>(i)));
    return names;
  });

  m.def(
      "apply_degradation",
      [](const std::string& type, const std::string& params_json, const Array& frames, std::uint64_t seed,
         std::uint64_t stream) {
        const DegradationType t = degradation_type_from_string(type);
        const PlanStage stage{t, {spec_from_json(t, Json::parse(params_json))}};
        const Clip clip = clip_from_array(frames);
        Clip out;
        {
          py::gil_scoped_release release;
          out = apply_stage(clip, stage, SeededRng(seed, stream));
        }
        return frames.ndim() == 3 ? frame_to_array(out[0]) : clip_to_array(out);
      },
      py::arg("type"), py::arg("params_json"), py::arg("frames"), py::arg("seed") = 0, py::arg("stream") = 0);

  m.def(
      "sample_plan",
      [](const std::string& config_json, std::size_t clip_index, std::size_t frame_count) {
        const PipelineConfig c = config_from_text(config_json);
        SeededRng rng = plan_rng_for_clip(c.seed, clip_index);
        PipelinePlan plan = sample_plan(c, rng, frame_count);
        plan.stream_id = clip_stream_id(clip_index);
        return plan_to_json(plan).dump();
      },
      py::arg("config_json") = "", py::arg("clip_index") = 0, py::arg("frame_count") = 1);

  m.def(
      "replay",
      [](const Array& frames, const std::string& plan_json, const std::string& config_json) {
        const Clip clip = clip_from_array(frames);
        const PipelinePlan plan = plan_from_json(Json::parse(plan_json));
        const PipelineConfig c = config_from_text(config_json);
        Clip out;
        {
          py::gil_scoped_release release;
          out = replay(clip, plan, c);
        }
        return clip_to_array(out);
      },
      py::arg("frames"), py::arg("plan_json"), py::arg("config_json") = "");

  m.def(
      "degrade_clips",
      [](const std::vector<Array>& clips, const std::string& config_json, int jobs) {
        std::vector<Clip> in;
        for (const auto& a : clips) in.push_back(clip_from_array(a));
        const PipelineConfig c = config_from_text(config_json);
        DatasetResult manifest;
        std::vector<Clip> out;
        {
          py::gil_scoped_release release;
          out = degrade_clips(in, c, &manifest, jobs);
        }
        std::vector<Array> arrays;
        for (const auto& clip : out) arrays.push_back(clip_to_array(clip));
        return py::make_tuple(arrays, manifest_to_json(manifest, c).dump());
      },
      py::arg("clips"), py::arg("config_json") = "", py::arg("jobs") = 1);

  m.def("default_config_json", [] { return config_to_json(PipelineConfig{}).dump(); });
  m.def("normalize_config_json", [](const std::string& text) { return config_to_json(config_from_text(text)).dump(); });

  m.def("psnr", [](const Array& a, const Array& b) { return psnr(clip_from_array(a), clip_from_array(b)); });
  m.def(
      "residual_stats",
      [](const Array& degraded, const Array& clean, int bins) {
        const Clip d = clip_from_array(degraded), c = clip_from_array(clean);
        if (!d.same_shape(c)) throw ShapeError("residual_stats: shapes differ");
        ResidualStats s = stats(residual(d[0], c[0]), bins);
        for (std::size_t i = 1; i < d.length(); ++i) s = merge(s, stats(residual(d[i], c[i]), bins));
        return stats_to_dict(s);
      },
      py::arg("degraded"), py::arg("clean"), py::arg("bins") = kDefaultHistogramBins);
  m.def("block_boundary_metric", [](const Array& f) { return block_boundary_metric(frame_from_array(f)); });

  m.def(
      "resize",
      [](const Array& f, int h, int w, const std::string& mode) {
        return frame_to_array(resize(frame_from_array(f), h, w, resample_mode_from_string(mode)));
      },
      py::arg("frame"), py::arg("height"), py::arg("width"), py::arg("mode") = "area");

  m.def(
      "downscale_noise_report",
      [](const Array& clean, const Array& noisy, std::vector<double> scales, const std::string& mode) {
        const DownscaleReport r =
            downscale_noise_report(clip_from_array(clean), clip_from_array(noisy), std::move(scales),
                                   resample_mode_from_string(mode));
        std::vector<std::tuple<double, std::string, double>> rows;
        for (const auto& row : r.rows) rows.emplace_back(row.scale, std::string(to_string(row.mode)), row.psnr_db);
        return rows;
      },
      py::arg("clean"), py::arg("noisy"), py::arg("scales") = std::vector<double>{1.0, 0.5, 0.25},
      py::arg("mode") = "area");

  m.def(
      "shuffle_variance_report",
      [](const Array& clean, const std::string& config_json, int n, int jobs) {
        const Clip clip = clip_from_array(clean);
        const PipelineConfig c = config_from_text(config_json);
        VarianceReport r;
        {
          py::gil_scoped_release release;
          r = shuffle_variance_report(clip, c, n, jobs);
        }
        auto disp = [](const Dispersion& d) {
          py::dict out;
          out["mean"] = d.mean;
          out["std"] = d.std;
          out["iqr"] = d.iqr;
          return out;
        };
        py::dict out;
        out["shuffled_stds"] = r.shuffled_stds;
        out["fixed_stds"] = r.fixed_stds;
        out["shuffled"] = disp(r.shuffled);
        out["fixed"] = disp(r.fixed);
        return out;
      },
      py::arg("clean"), py::arg("config_json") = "", py::arg("n_pipelines") = 200, py::arg("jobs") = 1);

  m.def(
      "verify_theorem",
      [](const std::string& model_name, double eta, std::size_t n_mc, std::uint64_t seed, const std::string& estimator,
         std::size_t dataset_size, double curvature_weight) {
        SeededRng root(seed, 0);
        SeededRng model_rng = root.substream(1);
        SeededRng data_rng = root.substream(2);
        SeededRng mc = root.substream(3);
        const DifferentiableModel model = builtin_model(model_name, model_rng);
        const auto data = make_theorem_dataset(model, dataset_size, 0.1, data_rng);
        const TheoremOptions opt{theorem_estimator_from_string(estimator), curvature_weight};
        TheoremResult r;
        {
          py::gil_scoped_release release;
          r = verify_theorem(model, data, eta, n_mc, mc, opt);
        }
        py::dict out;
        out["lhs"] = r.lhs;
        out["rhs"] = r.rhs;
        out["gap"] = r.gap;
        out["standard_error"] = r.standard_error;
        out["clean_loss"] = r.clean_loss;
        out["n_mc"] = r.n_mc;
        return out;
      },
      py::arg("model"), py::arg("eta"), py::arg("n_mc") = 100000, py::arg("seed") = 0,
      py::arg("estimator") = "plain", py::arg("dataset_size") = 16, py::arg("curvature_weight") = 1.0);

  m.def("read_png", [](const std::filesystem::path& p) { return frame_to_array(read_png(p)); });
  m.def("write_png", [](const std::filesystem::path& p, const Array& f) { write_png(p, frame_from_array(f)); });

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "vdegrade");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"));
}
