#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vdegrade/codec.hpp"
#include "vdegrade/frame.hpp"
#include "vdegrade/kernels.hpp"
#include "vdegrade/noise.hpp"
#include "vdegrade/resample.hpp"
#include "vdegrade/rng.hpp"

namespace vdegrade {

/// Degradation types in canonical (unshuffled) order.
enum class DegradationType { kBlur, kResize, kGaussian, kPoisson, kSpeckle, kIsp, kJpeg, kVideo };

inline constexpr std::size_t kDegradationTypeCount = 8;

std::string_view to_string(DegradationType type) noexcept;
DegradationType degradation_type_from_string(std::string_view name);

/// Variant alternatives follow DegradationType order, so index() == type.
using DegradationSpec = std::variant<KernelSpec, ResizeSpec, GaussianNoiseSpec, PoissonNoiseSpec, SpeckleNoiseSpec,
                                     IspNoiseSpec, JpegSpec, VideoCodecSpec>;

inline DegradationType type_of(const DegradationSpec& spec) noexcept {
  return static_cast<DegradationType>(spec.index());
}

enum class ParamScope { kPerClip, kPerFrame };

std::string_view to_string(ParamScope scope) noexcept;
ParamScope param_scope_from_string(std::string_view name);

struct TypeSelection {
  bool enabled = true;
  double probability = 1.0;
  friend bool operator==(const TypeSelection&, const TypeSelection&) = default;
};

struct PipelineConfig {
  std::array<TypeSelection, kDegradationTypeCount> types{};
  KernelSampling blur;
  ResizeSampling resize;
  NoiseSampling noise;
  CodecSampling codec;
  bool shuffle = true;
  bool clamp_each_stage = true;
  ParamScope param_scope = ParamScope::kPerClip;
  std::uint64_t seed = 0;

  TypeSelection& selection(DegradationType t) { return types[static_cast<std::size_t>(t)]; }
  const TypeSelection& selection(DegradationType t) const { return types[static_cast<std::size_t>(t)]; }

  /// Throws ConfigError on an empty enabled set or out-of-range probability.
  void validate() const;

  /// Config with exactly the listed types enabled, each always included.
  static PipelineConfig only(std::initializer_list<DegradationType> enabled);

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// One degradation in a plan. Frame-local stages sampled with per-frame scope
/// carry one spec per frame; every other stage carries exactly one spec.
struct PlanStage {
  DegradationType type;
  std::vector<DegradationSpec> specs;

  const DegradationSpec& spec_for_frame(std::size_t frame) const {
    return specs.size() == 1 ? specs.front() : specs.at(frame);
  }
  friend bool operator==(const PlanStage&, const PlanStage&) = default;
};

/// A realized degradation composition.
///
/// `stages` is in canonical order; `order` lists indices into `stages` in
/// application order. Each stage draws its noise from a sub-stream keyed by
/// its type and occurrence, not its position, so a plan and its reordering
/// share noise realizations stage by stage.
struct PipelinePlan {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::vector<PlanStage> stages;
  std::vector<std::size_t> order;

  const PlanStage& applied(std::size_t position) const { return stages.at(order.at(position)); }
  /// Same parameter draws applied in canonical order.
  PipelinePlan with_canonical_order() const;
  void validate() const;
  friend bool operator==(const PipelinePlan&, const PipelinePlan&) = default;
};

/// Includes each enabled type with its probability, samples parameters from
/// the configured ranges, then shuffles the order (Fisher-Yates) when enabled.
/// Inclusion, each type's parameters and the order use separate sub-streams.
PipelinePlan sample_plan(const PipelineConfig& config, SeededRng& rng, std::size_t frame_count = 1);

/// Applies a single stage to a whole clip. `stage_rng` is that stage's noise
/// stream; frame-local stages use stage_rng.substream(frame index).
Clip apply_stage(const Clip& clip, const PlanStage& stage, const SeededRng& stage_rng,
                 const std::vector<std::string>& allowed_codecs = kDefaultVideoCodecs,
                 std::vector<std::string>* commands = nullptr);

/// Noise sub-stream label of stages[index] within a plan.
std::uint64_t stage_stream_label(const PipelinePlan& plan, std::size_t index);

struct ApplyOptions {
  bool clamp_each_stage = true;
  std::vector<std::string> allowed_codecs = kDefaultVideoCodecs;
};

/// Applies the plan in order. With deferred clamping the Poisson stage sees
/// its input floored at 0 and the ISP stage its input clamped to [0, 1]
/// (both require it); everything else runs unclamped until the final clamp.
/// Stage failures are rethrown as StageError.
Clip apply_plan(const Clip& clip, const PipelinePlan& plan, const SeededRng& rng, const ApplyOptions& options = {},
                std::vector<std::string>* commands = nullptr);

// Stream layout used by degrade_dataset: clip i draws its plan from
// (seed, clip_stream_id(i)).substream(kPlanLabel) and its noise from
// .substream(kApplyLabel).
inline constexpr std::uint64_t kPlanLabel = 1;
inline constexpr std::uint64_t kApplyLabel = 2;
std::uint64_t clip_stream_id(std::size_t clip_index) noexcept;
SeededRng plan_rng_for_clip(std::uint64_t seed, std::size_t clip_index);
SeededRng apply_rng_for_clip(std::uint64_t seed, std::size_t clip_index);

struct ClipTask {
  std::string name;
  std::function<Clip()> load;
  std::function<void(const Clip&)> store;
};

struct ManifestEntry {
  std::size_t index = 0;
  std::string name;
  bool ok = false;
  std::string error;
  std::optional<PipelinePlan> plan;
  std::vector<std::string> commands;
};

struct DatasetResult {
  std::vector<ManifestEntry> entries;
  bool all_ok() const noexcept;
};

/// One fresh plan per clip. Load, degradation and store failures are recorded
/// per clip and processing continues. Output is independent of `jobs`.
DatasetResult degrade_dataset(const std::vector<ClipTask>& tasks, const PipelineConfig& config, int jobs = 1);

/// In-memory convenience wrapper; throws on the first failed clip.
std::vector<Clip> degrade_clips(const std::vector<Clip>& clips, const PipelineConfig& config,
                                DatasetResult* manifest = nullptr, int jobs = 1);

/// Re-applies a recorded plan using the apply stream derived from its
/// provenance (plan.seed, plan.stream_id).
Clip replay(const Clip& clip, const PipelinePlan& plan, const PipelineConfig& config);

}  // namespace vdegrade
