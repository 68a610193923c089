#include "vdegrade/serialization.hpp"

#include <fstream>
#include <set>

#include "vdegrade/error.hpp"

namespace vdegrade {

namespace {

// Strict reader over one JSON object: every key must be consumed or named
// as optional; leftovers are reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(path_ + ": missing key '" + key + "'");
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key) {
    const Json& v = at(key);
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  template <typename T>
  void optional(const std::string& key, T& out) {
    if (has(key)) out = get<T>(key);
  }

  template <typename T>
  void optional_range(const std::string& key, std::array<T, 2>& out) {
    if (!has(key)) return;
    const Json& v = at(key);
    if (!v.is_array() || v.size() != 2) throw ConfigError(path_ + "." + key + ": expected [min, max]");
    try {
      out = {v[0].get<T>(), v[1].get<T>()};
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong element type");
    }
    if (out[0] > out[1]) throw ConfigError(path_ + "." + key + ": min exceeds max");
  }

  std::string child(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
auto wrap(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Json matrix_to_json(const Matrix3& m) {
  Json j = Json::array();
  for (const auto& row : m) j.push_back({row[0], row[1], row[2]});
  return j;
}

Matrix3 matrix_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(path + ": expected 3x3 matrix");
  Matrix3 m;
  for (std::size_t r = 0; r < 3; ++r) {
    if (!j[r].is_array() || j[r].size() != 3) throw ConfigError(path + ": expected 3x3 matrix");
    for (std::size_t c = 0; c < 3; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(path + ": matrix entries must be numbers");
      m[r][c] = j[r][c].get<double>();
    }
  }
  return m;
}

void read_selection(ObjectReader& r, TypeSelection& sel) {
  sel.enabled = true;
  r.optional("enabled", sel.enabled);
  r.optional("probability", sel.probability);
}

void read_blur(ObjectReader& r, KernelSampling& b) {
  if (r.has("family_probabilities")) {
    const Json& fp = r.at("family_probabilities");
    ObjectReader fr(fp, r.child("family_probabilities"));
    b.family_probabilities.fill(0.0);
    for (KernelFamily f : kAllKernelFamilies) {
      fr.optional(std::string(to_string(f)), b.family_probabilities[static_cast<std::size_t>(f)]);
    }
    fr.finish();
  }
  r.optional_range("size", b.size);
  r.optional_range("sigma", b.sigma);
  r.optional_range("generalized_beta", b.generalized_beta);
  r.optional_range("plateau_beta", b.plateau_beta);
  r.optional_range("sinc_cutoff", b.sinc_cutoff);
  if (r.has("sinc_window")) {
    const auto name = r.get<std::string>("sinc_window");
    b.sinc_window = wrap(r.child("sinc_window"), [&] { return sinc_window_from_string(name); });
  }
}

void read_resize(ObjectReader& r, ResizeSampling& s) {
  r.optional_range("scale", s.scale);
  if (r.has("mode_probabilities")) {
    ObjectReader mr(r.at("mode_probabilities"), r.child("mode_probabilities"));
    s.mode_probabilities = {0.0, 0.0, 0.0};
    mr.optional("bilinear", s.mode_probabilities[0]);
    mr.optional("area", s.mode_probabilities[1]);
    mr.optional("bicubic", s.mode_probabilities[2]);
    mr.finish();
  }
  r.optional("bicubic_a", s.bicubic_a);
}

}  // namespace

PipelineConfig config_from_json(const Json& j) {
  ObjectReader root(j, "config");
  const int version = root.get<int>("version");
  if (version != kConfigVersion) {
    throw ConfigError("config: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kConfigVersion) + ")");
  }
  PipelineConfig c;
  root.optional("seed", c.seed);
  root.optional("shuffle", c.shuffle);
  root.optional("clamp_each_stage", c.clamp_each_stage);
  if (root.has("param_scope")) c.param_scope = param_scope_from_string(root.get<std::string>("param_scope"));

  if (root.has("degradations")) {
    ObjectReader deg(root.at("degradations"), root.child("degradations"));
    for (auto& t : c.types) t.enabled = false;
    for (std::size_t i = 0; i < kDegradationTypeCount; ++i) {
      const auto type = static_cast<DegradationType>(i);
      const std::string name(to_string(type));
      if (!deg.has(name)) continue;
      ObjectReader r(deg.at(name), deg.child(name));
      read_selection(r, c.types[i]);
      switch (type) {
        case DegradationType::kBlur:
          read_blur(r, c.blur);
          break;
        case DegradationType::kResize:
          read_resize(r, c.resize);
          break;
        case DegradationType::kGaussian:
          r.optional_range("sigma", c.noise.gaussian_sigma_255);
          r.optional("grayscale_probability", c.noise.gaussian_grayscale_probability);
          break;
        case DegradationType::kPoisson:
          r.optional_range("alpha", c.noise.poisson_alpha);
          break;
        case DegradationType::kSpeckle:
          r.optional_range("level", c.noise.speckle_level_255);
          r.optional("grayscale", c.noise.speckle_grayscale);
          break;
        case DegradationType::kIsp:
          r.optional_range("shot_gain", c.noise.isp_shot_gain);
          r.optional_range("read_sigma", c.noise.isp_read_sigma);
          r.optional_range("wb_red", c.noise.isp_wb_red);
          r.optional_range("wb_blue", c.noise.isp_wb_blue);
          if (r.has("ccm")) c.noise.isp_ccm = matrix_from_json(r.at("ccm"), r.child("ccm"));
          if (r.has("bayer_patterns")) {
            const auto names = r.get<std::vector<std::string>>("bayer_patterns");
            c.noise.isp_patterns.clear();
            for (const auto& n : names) {
              c.noise.isp_patterns.push_back(wrap(r.child("bayer_patterns"), [&] { return bayer_pattern_from_string(n); }));
            }
          }
          break;
        case DegradationType::kJpeg:
          r.optional_range("quality", c.codec.jpeg_quality);
          if (r.has("chroma_subsampling")) {
            const auto name = r.get<std::string>("chroma_subsampling");
            c.codec.jpeg_chroma = wrap(r.child("chroma_subsampling"), [&] { return chroma_subsampling_from_string(name); });
          }
          break;
        case DegradationType::kVideo:
          if (r.has("backend")) {
            const auto name = r.get<std::string>("backend");
            c.codec.video_backend = wrap(r.child("backend"), [&] { return video_backend_from_string(name); });
          }
          r.optional("codecs", c.codec.video_codecs);
          r.optional_range("bitrate", c.codec.video_bitrate);
          break;
      }
      r.finish();
    }
    deg.finish();
  }
  root.finish();
  c.validate();
  return c;
}

Json config_to_json(const PipelineConfig& c) {
  Json j;
  j["version"] = kConfigVersion;
  j["seed"] = c.seed;
  j["shuffle"] = c.shuffle;
  j["clamp_each_stage"] = c.clamp_each_stage;
  j["param_scope"] = to_string(c.param_scope);
  Json deg = Json::object();
  for (std::size_t i = 0; i < kDegradationTypeCount; ++i) {
    const auto type = static_cast<DegradationType>(i);
    Json t;
    t["enabled"] = c.types[i].enabled;
    t["probability"] = c.types[i].probability;
    switch (type) {
      case DegradationType::kBlur: {
        Json fp = Json::object();
        for (KernelFamily f : kAllKernelFamilies) fp[std::string(to_string(f))] = c.blur.family_probabilities[static_cast<std::size_t>(f)];
        t["family_probabilities"] = fp;
        t["size"] = c.blur.size;
        t["sigma"] = c.blur.sigma;
        t["generalized_beta"] = c.blur.generalized_beta;
        t["plateau_beta"] = c.blur.plateau_beta;
        t["sinc_cutoff"] = c.blur.sinc_cutoff;
        t["sinc_window"] = to_string(c.blur.sinc_window);
        break;
      }
      case DegradationType::kResize:
        t["scale"] = c.resize.scale;
        t["mode_probabilities"] = {{"bilinear", c.resize.mode_probabilities[0]},
                                   {"area", c.resize.mode_probabilities[1]},
                                   {"bicubic", c.resize.mode_probabilities[2]}};
        t["bicubic_a"] = c.resize.bicubic_a;
        break;
      case DegradationType::kGaussian:
        t["sigma"] = c.noise.gaussian_sigma_255;
        t["grayscale_probability"] = c.noise.gaussian_grayscale_probability;
        break;
      case DegradationType::kPoisson:
        t["alpha"] = c.noise.poisson_alpha;
        break;
      case DegradationType::kSpeckle:
        t["level"] = c.noise.speckle_level_255;
        t["grayscale"] = c.noise.speckle_grayscale;
        break;
      case DegradationType::kIsp: {
        t["shot_gain"] = c.noise.isp_shot_gain;
        t["read_sigma"] = c.noise.isp_read_sigma;
        t["wb_red"] = c.noise.isp_wb_red;
        t["wb_blue"] = c.noise.isp_wb_blue;
        t["ccm"] = matrix_to_json(c.noise.isp_ccm);
        Json pats = Json::array();
        for (auto p : c.noise.isp_patterns) pats.push_back(to_string(p));
        t["bayer_patterns"] = pats;
        break;
      }
      case DegradationType::kJpeg:
        t["quality"] = c.codec.jpeg_quality;
        t["chroma_subsampling"] = to_string(c.codec.jpeg_chroma);
        break;
      case DegradationType::kVideo:
        t["backend"] = to_string(c.codec.video_backend);
        t["codecs"] = c.codec.video_codecs;
        t["bitrate"] = c.codec.video_bitrate;
        break;
    }
    deg[std::string(to_string(type))] = t;
  }
  j["degradations"] = deg;
  return j;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

Json spec_to_json(const DegradationSpec& spec) {
  return std::visit(
      [](const auto& s) -> Json {
        using T = std::decay_t<decltype(s)>;
        Json j;
        if constexpr (std::is_same_v<T, KernelSpec>) {
          j["family"] = to_string(s.family);
          j["size"] = s.size;
          if (s.family == KernelFamily::kSinc) {
            j["cutoff_omega"] = *s.cutoff_omega;
            j["window"] = to_string(s.sinc_window);
          } else {
            j["sigma_x"] = s.sigma_x;
            j["sigma_y"] = s.sigma_y;
            j["theta"] = s.rotation_theta;
            if (s.shape_beta) j["beta"] = *s.shape_beta;
          }
        } else if constexpr (std::is_same_v<T, ResizeSpec>) {
          j["scale"] = s.scale;
          j["mode"] = to_string(s.mode);
          j["bicubic_a"] = s.bicubic_a;
        } else if constexpr (std::is_same_v<T, GaussianNoiseSpec>) {
          j["sigma_255"] = s.sigma_255;
          j["grayscale"] = s.grayscale;
        } else if constexpr (std::is_same_v<T, PoissonNoiseSpec>) {
          j["alpha"] = s.alpha;
        } else if constexpr (std::is_same_v<T, SpeckleNoiseSpec>) {
          j["level_255"] = s.level_255;
          j["grayscale"] = s.grayscale;
        } else if constexpr (std::is_same_v<T, IspNoiseSpec>) {
          j["bayer_pattern"] = to_string(s.bayer_pattern);
          j["shot_gain"] = s.shot_gain;
          j["read_sigma"] = s.read_sigma;
          j["wb_red"] = s.wb_red;
          j["wb_blue"] = s.wb_blue;
          j["ccm"] = matrix_to_json(s.ccm);
        } else if constexpr (std::is_same_v<T, JpegSpec>) {
          j["quality"] = s.quality;
          j["chroma_subsampling"] = to_string(s.chroma_subsampling);
        } else {
          j["backend"] = to_string(s.backend);
          j["codec"] = s.codec_name;
          j["bitrate"] = s.bitrate;
          j["qp"] = s.qp;
        }
        return j;
      },
      spec);
}

DegradationSpec spec_from_json(DegradationType type, const Json& j) {
  const std::string path = "spec(" + std::string(to_string(type)) + ")";
  ObjectReader r(j, path);
  DegradationSpec out;
  wrap(path, [&] {
    switch (type) {
      case DegradationType::kBlur: {
        KernelSpec s;
        s.family = kernel_family_from_string(r.get<std::string>("family"));
        s.size = r.get<int>("size");
        if (s.family == KernelFamily::kSinc) {
          s.cutoff_omega = r.get<double>("cutoff_omega");
          s.sinc_window = sinc_window_from_string(r.get<std::string>("window"));
        } else {
          s.sigma_x = r.get<double>("sigma_x");
          s.sigma_y = r.get<double>("sigma_y");
          s.rotation_theta = r.get<double>("theta");
          if (r.has("beta")) s.shape_beta = r.get<double>("beta");
        }
        validate(s);
        out = s;
        break;
      }
      case DegradationType::kResize:
        out = ResizeSpec{r.get<double>("scale"), resample_mode_from_string(r.get<std::string>("mode")),
                         r.get<double>("bicubic_a")};
        break;
      case DegradationType::kGaussian:
        out = GaussianNoiseSpec{r.get<double>("sigma_255"), r.get<bool>("grayscale")};
        break;
      case DegradationType::kPoisson:
        out = PoissonNoiseSpec{r.get<double>("alpha")};
        break;
      case DegradationType::kSpeckle:
        out = SpeckleNoiseSpec{r.get<double>("level_255"), r.get<bool>("grayscale")};
        break;
      case DegradationType::kIsp: {
        IspNoiseSpec s;
        s.bayer_pattern = bayer_pattern_from_string(r.get<std::string>("bayer_pattern"));
        s.shot_gain = r.get<double>("shot_gain");
        s.read_sigma = r.get<double>("read_sigma");
        s.wb_red = r.get<double>("wb_red");
        s.wb_blue = r.get<double>("wb_blue");
        s.ccm = matrix_from_json(r.at("ccm"), path + ".ccm");
        validate(s);
        out = s;
        break;
      }
      case DegradationType::kJpeg:
        out = JpegSpec{r.get<int>("quality"), chroma_subsampling_from_string(r.get<std::string>("chroma_subsampling"))};
        break;
      case DegradationType::kVideo:
        out = VideoCodecSpec{video_backend_from_string(r.get<std::string>("backend")), r.get<std::string>("codec"),
                             r.get<double>("bitrate"), r.get<int>("qp")};
        break;
    }
    return 0;
  });
  r.finish();
  return out;
}

Json plan_to_json(const PipelinePlan& plan) {
  Json j;
  j["seed"] = plan.seed;
  j["stream_id"] = plan.stream_id;
  Json stages = Json::array();
  for (const auto& s : plan.stages) {
    Json st;
    st["type"] = to_string(s.type);
    if (s.specs.size() == 1) {
      st["params"] = spec_to_json(s.specs.front());
    } else {
      Json per = Json::array();
      for (const auto& spec : s.specs) per.push_back(spec_to_json(spec));
      st["per_frame"] = per;
    }
    stages.push_back(st);
  }
  j["stages"] = stages;
  j["order"] = plan.order;
  // Readable application order, derived from the two fields above.
  Json applied = Json::array();
  for (std::size_t i : plan.order) applied.push_back(to_string(plan.stages[i].type));
  j["applied_types"] = applied;
  return j;
}

PipelinePlan plan_from_json(const Json& j) {
  ObjectReader r(j, "plan");
  PipelinePlan plan;
  plan.seed = r.get<std::uint64_t>("seed");
  plan.stream_id = r.get<std::uint64_t>("stream_id");
  const Json& stages = r.at("stages");
  if (!stages.is_array()) throw ConfigError("plan.stages: expected array");
  for (const Json& st : stages) {
    ObjectReader sr(st, "plan.stages[]");
    PlanStage stage{degradation_type_from_string(sr.get<std::string>("type")), {}};
    if (sr.has("params")) {
      stage.specs.push_back(spec_from_json(stage.type, sr.at("params")));
    } else {
      const Json& per = sr.at("per_frame");
      if (!per.is_array()) throw ConfigError("plan.stages[].per_frame: expected array");
      for (const Json& p : per) stage.specs.push_back(spec_from_json(stage.type, p));
    }
    sr.finish();
    plan.stages.push_back(std::move(stage));
  }
  plan.order = r.get<std::vector<std::size_t>>("order");
  if (r.has("applied_types")) r.at("applied_types");
  r.finish();
  wrap("plan", [&] {
    plan.validate();
    return 0;
  });
  return plan;
}

Json manifest_to_json(const DatasetResult& result, const PipelineConfig& config) {
  Json j;
  j["schema"] = "vdegrade.manifest";
  j["version"] = kManifestVersion;
  j["config"] = config_to_json(config);
  Json clips = Json::array();
  for (const auto& e : result.entries) {
    Json c;
    c["index"] = e.index;
    c["name"] = e.name;
    c["status"] = e.ok ? "ok" : "failed";
    if (!e.ok) c["error"] = e.error;
    if (e.plan) c["plan"] = plan_to_json(*e.plan);
    if (!e.commands.empty()) c["commands"] = e.commands;
    clips.push_back(c);
  }
  j["clips"] = clips;
  Json failed = Json::array();
  for (const auto& e : result.entries) {
    if (!e.ok) failed.push_back(e.name);
  }
  j["failed"] = failed;
  return j;
}

Manifest manifest_from_json(const Json& j) {
  ObjectReader r(j, "manifest");
  if (r.get<std::string>("schema") != "vdegrade.manifest") throw ConfigError("manifest: wrong schema tag");
  if (r.get<int>("version") != kManifestVersion) throw ConfigError("manifest: unsupported version");
  Manifest m;
  m.config = config_from_json(r.at("config"));
  const Json& clips = r.at("clips");
  for (const Json& c : clips) {
    ObjectReader cr(c, "manifest.clips[]");
    ManifestEntry e;
    e.index = cr.get<std::size_t>("index");
    e.name = cr.get<std::string>("name");
    e.ok = cr.get<std::string>("status") == "ok";
    cr.optional("error", e.error);
    if (cr.has("plan")) e.plan = plan_from_json(cr.at("plan"));
    cr.optional("commands", e.commands);
    cr.finish();
    m.result.entries.push_back(std::move(e));
  }
  r.at("failed");
  r.finish();
  return m;
}

}  // namespace vdegrade
