#include "vdegrade/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "vdegrade/error.hpp"
#include "vdegrade/metrics.hpp"

namespace vdegrade {

namespace {

constexpr std::array<std::string_view, kDegradationTypeCount> kTypeNames = {
    "blur", "resize", "gaussian", "poisson", "speckle", "isp", "jpeg", "video"};

// Sub-stream labels inside a clip's plan stream.
constexpr std::uint64_t kInclusionLabel = 1;
constexpr std::uint64_t kOrderLabel = 2;
constexpr std::uint64_t kParamsLabelBase = 100;

bool is_frame_local(DegradationType t) { return t != DegradationType::kVideo; }

DegradationSpec sample_spec(DegradationType type, const PipelineConfig& config, SeededRng& rng) {
  switch (type) {
    case DegradationType::kBlur:
      return sample_kernel_spec(rng, config.blur);
    case DegradationType::kResize:
      return sample_resize_spec(rng, config.resize);
    case DegradationType::kGaussian:
      return sample_gaussian_spec(rng, config.noise);
    case DegradationType::kPoisson:
      return sample_poisson_spec(rng, config.noise);
    case DegradationType::kSpeckle:
      return sample_speckle_spec(rng, config.noise);
    case DegradationType::kIsp:
      return sample_isp_spec(rng, config.noise);
    case DegradationType::kJpeg:
      return sample_jpeg_spec(rng, config.codec);
    case DegradationType::kVideo:
      return sample_video_spec(rng, config.codec);
  }
  throw ArgumentError("unknown degradation type");
}

Frame apply_frame_spec(const Frame& frame, const DegradationSpec& spec, SeededRng& rng) {
  return std::visit(
      [&](const auto& s) -> Frame {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, KernelSpec>) {
          return convolve(frame, make_kernel(s));
        } else if constexpr (std::is_same_v<T, ResizeSpec>) {
          return resizing_blur(frame, s);
        } else if constexpr (std::is_same_v<T, GaussianNoiseSpec>) {
          return add_gaussian(frame, s, rng);
        } else if constexpr (std::is_same_v<T, PoissonNoiseSpec>) {
          return add_poisson(frame, s, rng);
        } else if constexpr (std::is_same_v<T, SpeckleNoiseSpec>) {
          return add_speckle(frame, s, rng);
        } else if constexpr (std::is_same_v<T, IspNoiseSpec>) {
          return add_isp_noise(frame, s, rng);
        } else if constexpr (std::is_same_v<T, JpegSpec>) {
          return jpeg_roundtrip(frame, s);
        } else {
          throw ArgumentError("video compression is a clip-level stage");
        }
      },
      spec);
}

void floor_at_zero(Clip& clip) {
  for (auto& f : clip.frames()) {
    for (double& v : f.samples()) v = std::max(v, 0.0);
  }
}

}  // namespace

std::string_view to_string(DegradationType type) noexcept { return kTypeNames[static_cast<std::size_t>(type)]; }

DegradationType degradation_type_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == name) return static_cast<DegradationType>(i);
  }
  throw ConfigError("unknown degradation type '" + std::string(name) + "'");
}

std::string_view to_string(ParamScope scope) noexcept { return scope == ParamScope::kPerClip ? "per_clip" : "per_frame"; }

ParamScope param_scope_from_string(std::string_view name) {
  if (name == "per_clip") return ParamScope::kPerClip;
  if (name == "per_frame") return ParamScope::kPerFrame;
  throw ConfigError("unknown param_scope '" + std::string(name) + "'");
}

void PipelineConfig::validate() const {
  bool any = false;
  for (std::size_t i = 0; i < types.size(); ++i) {
    const auto& t = types[i];
    if (!(t.probability >= 0.0 && t.probability <= 1.0)) {
      throw ConfigError("inclusion probability of '" + std::string(kTypeNames[i]) + "' must lie in [0, 1]");
    }
    any = any || t.enabled;
  }
  if (!any) throw ConfigError("at least one degradation type must be enabled");
}

PipelineConfig PipelineConfig::only(std::initializer_list<DegradationType> enabled) {
  PipelineConfig c;
  for (auto& t : c.types) t.enabled = false;
  for (auto t : enabled) c.selection(t) = {true, 1.0};
  return c;
}

PipelinePlan PipelinePlan::with_canonical_order() const {
  PipelinePlan p = *this;
  for (std::size_t i = 0; i < p.order.size(); ++i) p.order[i] = i;
  return p;
}

void PipelinePlan::validate() const {
  if (order.size() != stages.size()) throw ArgumentError("plan order length differs from stage count");
  std::vector<bool> seen(stages.size(), false);
  for (std::size_t i : order) {
    if (i >= stages.size() || seen[i]) throw ArgumentError("plan order is not a permutation of its stages");
    seen[i] = true;
  }
  for (const auto& s : stages) {
    if (s.specs.empty()) throw ArgumentError("plan stage without parameters");
    for (const auto& spec : s.specs) {
      if (type_of(spec) != s.type) throw ArgumentError("plan stage parameters do not match its type");
    }
    if (!is_frame_local(s.type) && s.specs.size() != 1) {
      throw ArgumentError("clip-level stage must carry exactly one parameter set");
    }
  }
}

PipelinePlan sample_plan(const PipelineConfig& config, SeededRng& rng, std::size_t frame_count) {
  config.validate();
  if (frame_count == 0) throw ArgumentError("sample_plan: frame_count must be positive");
  PipelinePlan plan;
  plan.seed = rng.seed();
  plan.stream_id = rng.stream_id();

  SeededRng inclusion = rng.substream(kInclusionLabel);
  for (std::size_t i = 0; i < kDegradationTypeCount; ++i) {
    const auto type = static_cast<DegradationType>(i);
    // One draw per type regardless of enablement keeps later types' draws
    // independent of earlier settings.
    const double u = inclusion.uniform01();
    const auto& sel = config.types[i];
    if (!sel.enabled || !(u < sel.probability)) continue;

    SeededRng params = rng.substream(kParamsLabelBase + i);
    PlanStage stage{type, {}};
    if (config.param_scope == ParamScope::kPerFrame && is_frame_local(type)) {
      for (std::size_t f = 0; f < frame_count; ++f) {
        SeededRng frame_rng = params.substream(f);
        stage.specs.push_back(sample_spec(type, config, frame_rng));
      }
    } else {
      stage.specs.push_back(sample_spec(type, config, params));
    }
    plan.stages.push_back(std::move(stage));
  }

  if (config.shuffle) {
    SeededRng order = rng.substream(kOrderLabel);
    plan.order = order.permutation(plan.stages.size());
  } else {
    plan.order.resize(plan.stages.size());
    for (std::size_t i = 0; i < plan.order.size(); ++i) plan.order[i] = i;
  }
  return plan;
}

std::uint64_t stage_stream_label(const PipelinePlan& plan, std::size_t index) {
  const DegradationType type = plan.stages.at(index).type;
  std::uint64_t occurrence = 0;
  for (std::size_t i = 0; i < index; ++i) occurrence += plan.stages[i].type == type ? 1 : 0;
  return static_cast<std::uint64_t>(type) * 1000 + occurrence;
}

Clip apply_stage(const Clip& clip, const PlanStage& stage, const SeededRng& stage_rng,
                 const std::vector<std::string>& allowed_codecs, std::vector<std::string>* commands) {
  if (stage.type == DegradationType::kVideo) {
    SeededRng rng = stage_rng;
    const auto& spec = std::get<VideoCodecSpec>(stage.specs.at(0));
    VideoCompressResult r = video_compress(clip, spec, rng, allowed_codecs);
    if (commands != nullptr) commands->insert(commands->end(), r.commands.begin(), r.commands.end());
    return std::move(r.clip);
  }
  if (stage.specs.size() != 1 && stage.specs.size() != clip.length()) {
    throw ArgumentError("stage has " + std::to_string(stage.specs.size()) + " parameter sets for a clip of " +
                        std::to_string(clip.length()) + " frames");
  }
  std::vector<Frame> frames;
  frames.reserve(clip.length());
  for (std::size_t f = 0; f < clip.length(); ++f) {
    SeededRng frame_rng = stage_rng.substream(f);
    frames.push_back(apply_frame_spec(clip[f], stage.spec_for_frame(f), frame_rng));
  }
  return Clip(std::move(frames), clip.frame_rate_hint());
}

Clip apply_plan(const Clip& clip, const PipelinePlan& plan, const SeededRng& rng, const ApplyOptions& options,
                std::vector<std::string>* commands) {
  plan.validate();
  Clip current = clip;
  for (std::size_t pos = 0; pos < plan.order.size(); ++pos) {
    const std::size_t index = plan.order[pos];
    const PlanStage& stage = plan.stages[index];
    try {
      if (!options.clamp_each_stage) {
        if (stage.type == DegradationType::kPoisson) floor_at_zero(current);
        if (stage.type == DegradationType::kIsp) current = clamp_unit(std::move(current));
      }
      current = apply_stage(current, stage, rng.substream(stage_stream_label(plan, index)), options.allowed_codecs,
                            commands);
      if (options.clamp_each_stage) current = clamp_unit(std::move(current));
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(pos, std::string(to_string(stage.type)), e.what());
    }
  }
  if (!options.clamp_each_stage && !plan.order.empty()) current = clamp_unit(std::move(current));
  return current;
}

std::uint64_t clip_stream_id(std::size_t clip_index) noexcept { return mix64(static_cast<std::uint64_t>(clip_index)); }

SeededRng plan_rng_for_clip(std::uint64_t seed, std::size_t clip_index) {
  return SeededRng(seed, clip_stream_id(clip_index)).substream(kPlanLabel);
}

SeededRng apply_rng_for_clip(std::uint64_t seed, std::size_t clip_index) {
  return SeededRng(seed, clip_stream_id(clip_index)).substream(kApplyLabel);
}

bool DatasetResult::all_ok() const noexcept {
  return std::all_of(entries.begin(), entries.end(), [](const ManifestEntry& e) { return e.ok; });
}

namespace {

ManifestEntry run_task(const ClipTask& task, std::size_t index, const PipelineConfig& config) {
  ManifestEntry entry;
  entry.index = index;
  entry.name = task.name;
  try {
    const Clip clip = task.load();
    SeededRng plan_rng = plan_rng_for_clip(config.seed, index);
    PipelinePlan plan = sample_plan(config, plan_rng, clip.length());
    // Provenance records the clip stream, not the plan sub-stream.
    plan.stream_id = clip_stream_id(index);
    entry.plan = plan;
    const Clip out = apply_plan(clip, plan, apply_rng_for_clip(config.seed, index),
                                {config.clamp_each_stage, config.codec.video_codecs}, &entry.commands);
    if (task.store) task.store(out);
    entry.ok = true;
  } catch (const std::exception& e) {
    entry.ok = false;
    entry.error = e.what();
  }
  return entry;
}

}  // namespace

DatasetResult degrade_dataset(const std::vector<ClipTask>& tasks, const PipelineConfig& config, int jobs) {
  config.validate();
  if (tasks.empty()) throw ArgumentError("degrade_dataset: no clips");
  DatasetResult result;
  result.entries.resize(tasks.size());
  const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, static_cast<int>(tasks.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) result.entries[i] = run_task(tasks[i], i, config);
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return result;
}

std::vector<Clip> degrade_clips(const std::vector<Clip>& clips, const PipelineConfig& config,
                                DatasetResult* manifest, int jobs) {
  std::vector<Clip> outputs(clips.size());
  std::vector<ClipTask> tasks;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    tasks.push_back({"clip" + std::to_string(i), [&clips, i] { return clips[i]; },
                     [&outputs, i](const Clip& c) { outputs[i] = c; }});
  }
  DatasetResult r = degrade_dataset(tasks, config, jobs);
  for (const auto& e : r.entries) {
    if (!e.ok) throw Error("clip " + std::to_string(e.index) + " failed: " + e.error);
  }
  if (manifest != nullptr) *manifest = std::move(r);
  return outputs;
}

Clip replay(const Clip& clip, const PipelinePlan& plan, const PipelineConfig& config) {
  const SeededRng rng = SeededRng(plan.seed, plan.stream_id).substream(kApplyLabel);
  return apply_plan(clip, plan, rng, {config.clamp_each_stage, config.codec.video_codecs});
}

}  // namespace vdegrade
