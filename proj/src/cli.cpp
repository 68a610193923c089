#include "vdegrade/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "vdegrade/analysis.hpp"
#include "vdegrade/error.hpp"
#include "vdegrade/metrics.hpp"
#include "vdegrade/serialization.hpp"

namespace fs = std::filesystem;

namespace vdegrade {

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct AlignedPair {
  std::string name;
  Clip clean;
  Clip degraded;
};

// Loads clips present in both trees, matched by name. Throws ArgumentError
// when the trees do not line up.
std::vector<AlignedPair> load_aligned(const fs::path& clean_dir, const fs::path& degraded_dir) {
  const auto clean = resolve_clip_sources(clean_dir);
  const auto degraded = resolve_clip_sources(degraded_dir);
  if (clean.empty()) throw ArgumentError("no clips found under " + clean_dir.string());
  std::map<std::string, const ClipSource*> by_name;
  for (const auto& s : degraded) by_name[s.name] = &s;
  if (degraded.size() != clean.size()) {
    throw ArgumentError("clip trees are misaligned: " + std::to_string(clean.size()) + " clean vs " +
                        std::to_string(degraded.size()) + " degraded clips");
  }
  std::vector<AlignedPair> pairs;
  for (const auto& s : clean) {
    const auto it = by_name.find(s.name);
    if (it == by_name.end()) throw ArgumentError("clip '" + s.name + "' missing from " + degraded_dir.string());
    AlignedPair p{s.name, load_clip(s), load_clip(*it->second)};
    if (!p.clean.same_shape(p.degraded)) throw ArgumentError("clip '" + s.name + "' differs in frame count or size");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ArgumentError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

PipelineConfig load_config_checked(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw ConfigError("config file not found: " + path.string());
  return load_config(path);
}

}  // namespace

std::vector<ClipSource> resolve_clip_sources(const fs::path& root) {
  auto sources = list_clip_sources(root);
  if (sources.empty() && !list_frames(root).empty()) {
    const fs::path canonical = fs::weakly_canonical(root);
    sources.push_back({canonical.filename().string(), canonical, ClipSourceKind::kFrameDirectory});
  }
  return sources;
}

int cmd_degrade(const DegradeOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    PipelineConfig config = load_config_checked(options.config_path);
    if (options.seed) config.seed = *options.seed;
    if (options.clamp_each_stage) config.clamp_each_stage = *options.clamp_each_stage;
    config.validate();
    std::vector<ClipSource> sources;
    try {
      sources = resolve_clip_sources(options.input_dir);
    } catch (const IoError& e) {
      throw ArgumentError(e.what());
    }
    if (sources.empty()) throw ArgumentError("no clips found under " + options.input_dir.string());
    std::error_code ec;
    if (fs::equivalent(options.input_dir, options.output_dir, ec)) {
      throw ArgumentError("output directory must differ from the input directory");
    }
    fs::create_directories(options.output_dir);

    std::vector<ClipTask> tasks;
    for (const auto& src : sources) {
      const fs::path out_root = options.output_dir;
      tasks.push_back({src.name, [src] { return load_clip(src); },
                       [src, out_root](const Clip& clip) { store_clip(src, out_root, clip); }});
    }
    const DatasetResult result = degrade_dataset(tasks, config, options.jobs);
    const fs::path manifest_path = options.output_dir / kManifestFileName;
    std::ofstream manifest(manifest_path);
    manifest << manifest_to_json(result, config).dump(2) << "\n";
    if (!manifest) throw IoError("cannot write " + manifest_path.string());

    std::size_t failed = 0;
    for (const auto& e : result.entries) {
      if (!e.ok) {
        ++failed;
        err << "clip '" << e.name << "' failed: " << e.error << "\n";
      }
    }
    out << "degraded " << result.entries.size() - failed << " of " << result.entries.size() << " clips; manifest "
        << manifest_path.string() << "\n";
    return failed == 0 ? kExitOk : kExitFailure;
  });
}

int cmd_stats(const fs::path& clean_dir, const fs::path& degraded_dir, std::ostream& csv, std::ostream& err) {
  return guarded(err, [&] {
    const auto pairs = load_aligned(clean_dir, degraded_dir);
    csv << "clip,sample_count,mean,variance,std";
    for (int b = 0; b < kDefaultHistogramBins; ++b) {
      char buf[16];
      std::snprintf(buf, sizeof buf, ",bin_%03d", b);
      csv << buf;
    }
    csv << "\n";
    auto row = [&](const std::string& name, const ResidualStats& s) {
      csv << name << "," << s.sample_count << "," << fmt(s.mean) << "," << fmt(s.variance) << "," << fmt(s.std);
      for (auto c : s.histogram) csv << "," << c;
      csv << "\n";
    };
    ResidualStats pooled;
    bool first = true;
    for (const auto& p : pairs) {
      ResidualStats clip_stats;
      for (std::size_t i = 0; i < p.clean.length(); ++i) {
        const auto s = stats(residual(p.degraded[i], p.clean[i]));
        clip_stats = i == 0 ? s : merge(clip_stats, s);
      }
      row(p.name, clip_stats);
      pooled = first ? clip_stats : merge(pooled, clip_stats);
      first = false;
    }
    row("*", pooled);
    return kExitOk;
  });
}

int cmd_downscale_report(const fs::path& clean_dir, const fs::path& degraded_dir, const std::vector<double>& scales,
                         ResampleMode mode, std::ostream& csv, std::ostream& err) {
  return guarded(err, [&] {
    const auto pairs = load_aligned(clean_dir, degraded_dir);
    std::vector<DownscaleReport> reports;
    for (const auto& p : pairs) reports.push_back(downscale_noise_report(p.clean, p.degraded, scales, mode));
    csv << "clip,scale,mode,psnr_db\n";
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      for (const auto& r : reports[i].rows) {
        csv << pairs[i].name << "," << fmt(r.scale) << "," << to_string(r.mode) << "," << fmt(r.psnr_db) << "\n";
      }
    }
    return kExitOk;
  });
}

int cmd_shuffle_variance(const ShuffleVarianceOptions& options, std::ostream& csv, std::ostream& err) {
  return guarded(err, [&] {
    PipelineConfig config = options.config_path ? load_config_checked(*options.config_path) : PipelineConfig{};
    if (options.seed) config.seed = *options.seed;
    if (options.clamp_each_stage) config.clamp_each_stage = *options.clamp_each_stage;
    const auto sources = resolve_clip_sources(options.clean_dir);
    if (sources.empty()) throw ArgumentError("no clips found under " + options.clean_dir.string());
    const ClipSource* chosen = &sources.front();
    if (options.clip) {
      chosen = nullptr;
      for (const auto& s : sources) {
        if (s.name == *options.clip) chosen = &s;
      }
      if (!chosen) throw ArgumentError("clip '" + *options.clip + "' not found");
    }
    const Clip clean = load_clip(*chosen);
    const VarianceReport report = shuffle_variance_report(clean, config, options.pipelines, options.jobs);
    csv << "pipeline,shuffled_std,fixed_std\n";
    for (std::size_t i = 0; i < report.shuffled_stds.size(); ++i) {
      csv << i << "," << fmt(report.shuffled_stds[i]) << "," << fmt(report.fixed_stds[i]) << "\n";
    }
    auto summary = [](const Dispersion& d) { return Json{{"mean", d.mean}, {"std", d.std}, {"iqr", d.iqr}}; };
    const Json j = {{"schema", "vdegrade.shuffle_variance"},
                    {"version", 1},
                    {"clip", chosen->name},
                    {"pipelines", options.pipelines},
                    {"seed", config.seed},
                    {"shuffled", summary(report.shuffled)},
                    {"fixed", summary(report.fixed)}};
    if (options.summary_path) {
      std::ofstream out(*options.summary_path);
      out << j.dump(2) << "\n";
      if (!out) throw IoError("cannot write " + options.summary_path->string());
    }
    err << "dispersion (std of stds): shuffled " << fmt(report.shuffled.std) << ", fixed " << fmt(report.fixed.std)
        << "; iqr: shuffled " << fmt(report.shuffled.iqr) << ", fixed " << fmt(report.fixed.iqr) << "\n";
    return kExitOk;
  });
}

int cmd_verify_theorem(const VerifyTheoremOptions& options, std::ostream& csv, std::ostream& err) {
  return guarded(err, [&] {
    SeededRng rng(options.seed, 0x7468656f);
    SeededRng model_rng = rng.substream(1);
    SeededRng data_rng = rng.substream(2);
    const DifferentiableModel model = builtin_model(options.model, model_rng);
    const bool linear = options.model == "linear";
    TheoremOptions topt;
    topt.estimator = options.estimator ? theorem_estimator_from_string(*options.estimator)
                                       : (linear ? TheoremEstimator::kPlain : TheoremEstimator::kControlVariate);
    if (options.etas.empty()) throw ArgumentError("at least one eta is required");
    if (options.n_mc < 1000) throw ArgumentError("n_mc must be at least 1000");
    const auto data = make_theorem_dataset(model, options.dataset_size, 0.1, data_rng);
    csv << "eta,lhs,rhs,gap,standard_error,estimator\n";
    std::vector<double> gaps;
    bool within = true;
    for (std::size_t i = 0; i < options.etas.size(); ++i) {
      SeededRng mc = rng.substream(100 + i);
      const auto r = verify_theorem(model, data, options.etas[i], options.n_mc, mc, topt);
      csv << fmt(options.etas[i]) << "," << fmt(r.lhs) << "," << fmt(r.rhs) << "," << fmt(r.gap) << ","
          << fmt(r.standard_error) << "," << to_string(topt.estimator) << "\n";
      gaps.push_back(r.gap);
      within = within && r.gap <= 3.0 * r.standard_error;
    }
    if (linear) {
      err << (within ? "linear model: all gaps within 3 standard errors\n"
                     : "linear model: a gap exceeds 3 standard errors\n");
      return within ? kExitOk : kExitFailure;
    }
    if (options.etas.size() < 2) {
      err << "slope criterion needs at least two eta values\n";
      return kExitFailure;
    }
    const double slope = log_log_slope(options.etas, gaps);
    const bool ok = slope >= 2.5;
    err << "log-log slope of gap vs eta: " << fmt(slope) << (ok ? " (>= 2.5)\n" : " (< 2.5)\n");
    return ok ? kExitOk : kExitFailure;
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Synthetic video degradation pipeline and analysis tools"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string clamp_mode;
  auto add_common = [&](CLI::App* cmd, bool with_jobs, bool with_clamp) {
    cmd->add_option("--seed", seed, "Random seed (overrides the config)");
    if (with_jobs) cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    if (with_clamp) {
      cmd->add_option("--clamp-mode", clamp_mode, "Clamp after each stage or only at the end")
          ->check(CLI::IsMember({"each", "final"}));
    }
  };
  auto clamp_override = [&]() -> std::optional<bool> {
    if (clamp_mode.empty()) return std::nullopt;
    return clamp_mode == "each";
  };

  DegradeOptions degrade;
  std::string config_path;
  auto* c_degrade = app.add_subcommand("degrade", "Degrade every clip under INPUT into OUTPUT");
  c_degrade->add_option("input", degrade.input_dir, "Input dataset root")->required();
  c_degrade->add_option("output", degrade.output_dir, "Output dataset root")->required();
  c_degrade->add_option("--config", config_path, "Pipeline config (JSON)");
  add_common(c_degrade, true, true);

  fs::path clean_dir, degraded_dir, output_path;
  auto* c_stats = app.add_subcommand("stats", "Residual statistics CSV for aligned clean/degraded trees");
  c_stats->add_option("clean", clean_dir)->required();
  c_stats->add_option("degraded", degraded_dir)->required();
  c_stats->add_option("-o,--output", output_path, "CSV path (default stdout)");
  add_common(c_stats, false, false);

  std::vector<double> scales = {1.0, 0.5, 0.25};
  std::string mode_name = "area";
  auto* c_down = app.add_subcommand("downscale-report", "PSNR of downscaled degraded vs clean clips");
  c_down->add_option("clean", clean_dir)->required();
  c_down->add_option("degraded", degraded_dir)->required();
  c_down->add_option("--scales", scales, "Scale factors")->delimiter(',');
  c_down->add_option("--mode", mode_name, "bilinear, area or bicubic");
  c_down->add_option("-o,--output", output_path, "CSV path (default stdout)");
  add_common(c_down, false, false);

  ShuffleVarianceOptions shuffle;
  std::string clip_name, summary_path;
  auto* c_shuffle = app.add_subcommand("shuffle-variance", "Residual spread with shuffled vs fixed stage order");
  c_shuffle->add_option("clean", shuffle.clean_dir)->required();
  c_shuffle->add_option("--clip", clip_name, "Clip name (default: first)");
  c_shuffle->add_option("--config", config_path, "Pipeline config (JSON); default: all types");
  c_shuffle->add_option("--pipelines", shuffle.pipelines, "Number of sampled plans")->check(CLI::Range(2, 1000000));
  c_shuffle->add_option("--summary", summary_path, "Summary JSON path");
  c_shuffle->add_option("-o,--output", output_path, "CSV path (default stdout)");
  add_common(c_shuffle, true, true);

  VerifyTheoremOptions theorem;
  std::string estimator;
  auto* c_theorem = app.add_subcommand("verify-theorem", "Monte-Carlo check of the noise-injection expansion");
  c_theorem->add_option("--model", theorem.model, "linear, quadratic, cubic or mlp-tiny");
  c_theorem->add_option("--eta", theorem.etas, "Noise levels")->delimiter(',');
  c_theorem->add_option("--n-mc", theorem.n_mc, "Monte-Carlo draws per sample");
  c_theorem->add_option("--estimator", estimator, "plain or control_variate");
  c_theorem->add_option("--samples", theorem.dataset_size, "Dataset size")->check(CLI::PositiveNumber);
  c_theorem->add_option("-o,--output", output_path, "CSV path (default stdout)");
  add_common(c_theorem, false, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::ofstream file;
  if (!output_path.empty()) {
    file.open(output_path);
    if (!file) {
      std::cerr << "cannot write " << output_path.string() << "\n";
      return kExitUsage;
    }
  }
  std::ostream& out = output_path.empty() ? std::cout : file;

  if (*c_degrade) {
    if (config_path.empty()) {
      std::cerr << "usage error: degrade requires --config\n";
      return kExitUsage;
    }
    degrade.config_path = config_path;
    degrade.seed = seed;
    degrade.jobs = jobs;
    degrade.clamp_each_stage = clamp_override();
    return cmd_degrade(degrade, std::cout, std::cerr);
  }
  if (*c_stats) return cmd_stats(clean_dir, degraded_dir, out, std::cerr);
  if (*c_down) {
    ResampleMode mode;
    try {
      mode = resample_mode_from_string(mode_name);
    } catch (const Error& e) {
      std::cerr << "usage error: " << e.what() << "\n";
      return kExitUsage;
    }
    return cmd_downscale_report(clean_dir, degraded_dir, scales, mode, out, std::cerr);
  }
  if (*c_shuffle) {
    if (!clip_name.empty()) shuffle.clip = clip_name;
    if (!config_path.empty()) shuffle.config_path = config_path;
    if (!summary_path.empty()) shuffle.summary_path = summary_path;
    shuffle.seed = seed;
    shuffle.jobs = jobs;
    shuffle.clamp_each_stage = clamp_override();
    return cmd_shuffle_variance(shuffle, out, std::cerr);
  }
  if (seed) theorem.seed = *seed;
  if (!estimator.empty()) theorem.estimator = estimator;
  const auto& names = builtin_model_names();
  if (std::find(names.begin(), names.end(), theorem.model) == names.end()) {
    std::cerr << "usage error: unknown model '" << theorem.model << "'\n";
    return kExitUsage;
  }
  return cmd_verify_theorem(theorem, out, std::cerr);
}

}  // namespace vdegrade
