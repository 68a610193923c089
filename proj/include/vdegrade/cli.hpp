#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vdegrade/io.hpp"
#include "vdegrade/resample.hpp"

namespace vdegrade {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kManifestFileName = "manifest.json";

/// Clips under a dataset root. A root with no clip sources but PNG frames
/// directly inside is treated as a single clip named after the directory.
std::vector<ClipSource> resolve_clip_sources(const std::filesystem::path& root);

struct DegradeOptions {
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  std::filesystem::path config_path;
  std::optional<std::uint64_t> seed;
  std::optional<bool> clamp_each_stage;
  int jobs = 1;
};

int cmd_degrade(const DegradeOptions& options, std::ostream& out, std::ostream& err);

/// CSV: clip,sample_count,mean,variance,std,bin_000..bin_200 plus a pooled
/// row with clip "*".
int cmd_stats(const std::filesystem::path& clean_dir, const std::filesystem::path& degraded_dir, std::ostream& csv,
              std::ostream& err);

/// CSV: clip,scale,mode,psnr_db.
int cmd_downscale_report(const std::filesystem::path& clean_dir, const std::filesystem::path& degraded_dir,
                         const std::vector<double>& scales, ResampleMode mode, std::ostream& csv, std::ostream& err);

struct ShuffleVarianceOptions {
  std::filesystem::path clean_dir;
  std::optional<std::string> clip;  // default: first clip
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<bool> clamp_each_stage;
  int pipelines = 200;
  int jobs = 1;
  std::optional<std::filesystem::path> summary_path;
};

/// CSV: pipeline,shuffled_std,fixed_std. Summary (JSON) to summary_path and
/// a one-line digest to err.
int cmd_shuffle_variance(const ShuffleVarianceOptions& options, std::ostream& csv, std::ostream& err);

struct VerifyTheoremOptions {
  std::string model = "linear";
  std::vector<double> etas = {0.1, 0.05, 0.025};
  std::size_t n_mc = 100000;
  std::uint64_t seed = 0;
  std::optional<std::string> estimator;  // default: plain for linear, control_variate otherwise
  std::size_t dataset_size = 16;
};

/// CSV: eta,lhs,rhs,gap,standard_error,estimator. Exit 0 iff the linear
/// model's gaps are within 3 standard errors, or a nonlinear model's gap
/// slope over eta is at least 2.5.
int cmd_verify_theorem(const VerifyTheoremOptions& options, std::ostream& csv, std::ostream& err);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace vdegrade
