// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are the published ones; nothing is retuned.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "test_support.hpp"
#include "vdegrade/analysis.hpp"
#include "vdegrade/cli.hpp"
#include "vdegrade/codec.hpp"
#include "vdegrade/kernels.hpp"
#include "vdegrade/metrics.hpp"
#include "vdegrade/noise.hpp"
#include "vdegrade/pipeline.hpp"
#include "vdegrade/serialization.hpp"

using namespace vdegrade;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double rel_err(double got, double want) { return std::fabs(got / want - 1.0); }

std::vector<double> residual_samples(const RawMosaic& noisy, double level) {
  std::vector<double> r(noisy.samples.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = noisy.samples[i] - level;
  return r;
}

double tap_sum(const Kernel& k) {
  double s = 0.0;
  for (double t : k.taps()) s += t;
  return s;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// --- criteria -----------------------------------------------------------------

void awgn(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const Frame gray(600, 600, 0.5);  // 1.08e6 samples
  SeededRng rng(1, 1);
  const ResidualStats s = stats(residual(add_gaussian(gray, {25.0, false}, rng), gray));
  const double err = rel_err(s.std, 25.0 / 255.0);
  v.detail << "std " << s.std << " vs " << 25.0 / 255.0 << " (rel err " << err << ", n=" << s.sample_count << ")";
  v.require(s.sample_count >= 1000000, "sample count >= 1e6");
  v.require(err < 0.01, "std within 1%");

  const Frame gx = add_gaussian(gray, {25.0, true}, rng);
  bool equal = true;
  for (int y = 0; y < gray.height() && equal; ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      const double r0 = gx.at(y, x, 0) - 0.5;
      equal = equal && r0 == gx.at(y, x, 1) - 0.5 && r0 == gx.at(y, x, 2) - 0.5;
    }
  }
  v.detail << "; grayscale channels equal: " << (equal ? "yes" : "no");
  v.require(equal, "grayscale residual channels exactly equal");
  const double secs = elapsed(t0);
  v.detail << "; " << secs << " s";
  v.require(secs < 5.0, "runtime < 5 s");
}

void poisson(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  SeededRng rng(2, 2);
  const Frame half(600, 600, 0.5);
  const double var = stats(residual(add_poisson(half, {2.0}, rng), half)).variance;
  v.detail << "variance " << var << " vs 0.005 (rel err " << rel_err(var, 0.005) << ")";
  v.require(rel_err(var, 0.005) < 0.03, "variance within 3%");

  for (double alpha : {2.0, 3.0}) {
    std::vector<double> xs, vs;
    for (int i = 1; i <= 9; ++i) {
      const Frame c(400, 400, i / 10.0);
      xs.push_back(i / 10.0);
      vs.push_back(stats(residual(add_poisson(c, {alpha}, rng), c)).variance);
    }
    const double mx = testing::mean_of(xs), mv = testing::mean_of(vs);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (vs[i] - mv);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double slope = sxy / sxx;
    const double want = std::pow(10.0, -alpha);
    v.detail << "; slope(alpha=" << alpha << ") " << slope << " vs " << want;
    v.require(rel_err(slope, want) < 0.05, "variance slope within 5%");
  }
  const double secs = elapsed(t0);
  v.detail << "; " << secs << " s";
  v.require(secs < 10.0, "runtime < 10 s");
}

void speckle(Verdict& v) {
  SeededRng rng(3, 3);
  const Frame half(600, 600, 0.5);
  const double sd = stats(residual(add_speckle(half, {25.0, false}, rng), half)).std;
  const double want = 0.5 * 25.0 / 255.0;
  v.detail << "std " << sd << " vs " << want << " (rel err " << rel_err(sd, want) << ")";
  v.require(rel_err(sd, want) < 0.02, "std within 2%");
}

void isp(Verdict& v) {
  IspNoiseSpec spec;  // zero noise, identity CCM and unit gains
  double best = -INFINITY;
  std::string best_name;
  v.detail << "round-trip PSNR:";
  for (const auto& name : testing::fixture_names()) {
    const Frame x = testing::fixture(name);
    const double p = psnr(isp_forward(isp_reverse(x, spec), spec), x);
    v.detail << " " << name << "=" << p;
    if (p > best) {
      best = p;
      best_name = name;
    }
  }
  v.detail << " (best " << best_name << " " << best << " dB, need > 40)";
  v.require(best > 40.0, "round-trip PSNR > 40 dB on a natural fixture");

  SeededRng rng(4, 4);
  IspNoiseSpec noisy;
  noisy.shot_gain = 1e-3;
  noisy.read_sigma = 0.02;
  double worst = 0.0;
  for (double level : {0.1, 0.5, 0.9}) {
    const RawMosaic raw{600, 600, BayerPattern::kRGGB, std::vector<double>(360000, level)};
    const double var = testing::variance_of(residual_samples(isp_add_raw_noise(raw, noisy, rng), level));
    worst = std::max(worst, rel_err(var, level * noisy.shot_gain + noisy.read_sigma * noisy.read_sigma));
  }
  v.detail << "; raw variance worst rel err " << worst;
  v.require(worst < 0.03, "raw noise variance within 3% of a*x + b^2");
}

void jpeg(Verdict& v) {
  const QuantTables q50 = derive_quant_tables(50);
  const bool tables = q50.luma == kBaseLumaTable && q50.chroma == kBaseChromaTable;
  v.detail << "Q50 tables equal base: " << (tables ? "yes" : "no");
  v.require(tables, "Q50 tables equal base tables");
  int monotone = 0;
  int blocky = 0;
  for (const auto& name : testing::fixture_names()) {
    const Frame x = testing::fixture(name);
    double prev = -INFINITY;
    bool ok = true;
    v.detail << "; " << name;
    for (int q : {30, 50, 70, 95}) {
      const double p = psnr(jpeg_roundtrip(x, {q}), x);
      v.detail << " " << p;
      ok = ok && p >= prev;
      prev = p;
    }
    monotone += ok;
    blocky += block_boundary_metric(jpeg_roundtrip(x, {30})) > block_boundary_metric(jpeg_roundtrip(x, {95}));
  }
  const int n = static_cast<int>(testing::fixture_names().size());
  v.detail << "; monotone on " << monotone << "/" << n << ", blockier at Q30 on " << blocky << "/" << n;
  v.require(n >= 5 && monotone == n, "PSNR monotone in quality on every fixture");
  v.require(blocky == n, "Q30 blockiness exceeds Q95");
}

void video(Verdict& v) {
  SeededRng rng(6, 6);
  const Clip still(std::vector<Frame>(5, quantize_8bit(testing::fixture("coffee"))));
  bool exact = true;
  for (int qp : {8, 24, 51}) {
    VideoCodecSpec spec;
    spec.qp = qp;
    const Clip out = video_compress(still, spec, rng).clip;
    for (std::size_t i = 1; i < out.length(); ++i) exact = exact && out[i] == out[0];
  }
  v.detail << "static clip exact: " << (exact ? "yes" : "no");
  v.require(exact, "static clip propagates frame 0 exactly");

  std::vector<Frame> frames;
  const Clip source = testing::fixture_clip("astronaut", 4);
  for (const Frame& f : source.frames()) frames.push_back(quantize_8bit(f));
  const Clip moving(std::move(frames));
  double prev = INFINITY;
  bool monotone = true;
  v.detail << "; PSNR by qp:";
  for (int qp = kMinQp; qp <= kMaxQp; ++qp) {
    VideoCodecSpec spec;
    spec.qp = qp;
    const double p = psnr(video_compress(moving, spec, rng).clip, moving);
    if (qp % 8 == 0 || qp == kMaxQp) v.detail << " " << qp << "=" << p;
    monotone = monotone && p <= prev;
    prev = p;
  }
  v.require(monotone, "PSNR non-increasing in qp over 8..51");
}

void kernels(Verdict& v) {
  SeededRng rng(7, 7);
  double worst = 0.0;
  for (std::size_t f = 0; f < kKernelFamilyCount; ++f) {
    KernelSampling s;
    s.family_probabilities.fill(0.0);
    s.family_probabilities[f] = 1.0;
    for (int i = 0; i < 1000; ++i) worst = std::max(worst, std::fabs(tap_sum(make_kernel(sample_kernel_spec(rng, s))) - 1.0));
  }
  v.detail << "max |sum - 1| over 7x1000 specs " << worst;
  v.require(worst < 1e-6, "normalization within 1e-6");

  const Frame x = testing::fixture("astronaut");
  const bool identity = convolve(x, Kernel::delta(7)) == x && convolve(x, Kernel::delta(21)) == x;
  v.detail << "; delta identity: " << (identity ? "exact" : "no");
  v.require(identity, "delta kernel is exact identity");

  Frame noise(512, 512);
  for (double& s : noise.samples()) s = rng.normal();
  const double in_var = stats(noise).variance;
  double worst_var = 0.0;
  SeededRng krng(7, 8);
  for (int i = 0; i < 10; ++i) {
    const Kernel k = make_kernel(sample_kernel_spec(krng));
    worst_var = std::max(worst_var, rel_err(stats(convolve(noise, k)).variance, in_var * k.sum_of_squares()));
  }
  v.detail << "; noise variance vs sum(taps^2) v, worst rel err " << worst_var << " over 10 sampled kernels";
  v.require(worst_var < 0.03, "variance within 3%");
}

void downscale(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  bool all = true;
  for (const auto& name : testing::fixture_names()) {
    const Clip clean = testing::fixture_clip(name, 3);
    std::vector<Frame> noisy_frames;
    for (std::size_t f = 0; f < clean.length(); ++f) {
      SeededRng rng(8, f);
      noisy_frames.push_back(add_gaussian(clean[f], {50.0}, rng));  // pre-clamp
    }
    const DownscaleReport r = downscale_noise_report(clean, Clip(std::move(noisy_frames)), {1.0, 0.5, 0.25});
    const double p1 = r.rows[0].psnr_db, p2 = r.rows[1].psnr_db, p4 = r.rows[2].psnr_db;
    if (name == "astronaut") v.detail << "astronaut PSNR s=1 " << p1 << ", s=1/2 " << p2 << ", s=1/4 " << p4;
    all = all && p2 >= p1 + 3.0 && p4 >= p2;
  }
  v.detail << "; holds on all fixtures: " << (all ? "yes" : "no");
  v.require(all, "PSNR(1/2) >= PSNR(1) + 3 dB and PSNR(1/4) >= PSNR(1/2)");
  const double secs = elapsed(t0);
  v.detail << "; " << secs << " s";
  v.require(secs < 30.0, "runtime < 30 s");
}

void shuffle_variance(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineConfig config;  // every type, default ranges
  config.seed = 2024;
  const VarianceReport r = shuffle_variance_report(testing::fixture_clip("chelsea", 3), config, 200, jobs());
  v.detail << "std of per-plan stds: shuffled " << r.shuffled.std << ", fixed " << r.fixed.std << "; IQR shuffled "
           << r.shuffled.iqr << ", fixed " << r.fixed.iqr;
  v.require(r.shuffled_stds.size() == 200 && r.fixed_stds.size() == 200, "200 pipelines each");
  v.require(r.shuffled.std >= r.fixed.std, "shuffled dispersion >= fixed");
  const double secs = elapsed(t0);
  v.detail << "; " << secs << " s";
  v.require(secs < 600.0, "runtime < 10 min");
}

void theorem(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  int within = 0;
  double worst_z = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    SeededRng rng(1000 + k, 0);
    const DifferentiableModel m = random_linear_model(4, 3, rng);
    const auto data = make_theorem_dataset(m, 16, 0.1, rng);
    const TheoremResult r = verify_theorem(m, data, 0.1, 100000, rng);
    worst_z = std::max(worst_z, r.gap / r.standard_error);
    within += r.gap < 3.0 * r.standard_error;
  }
  v.detail << "linear: " << within << "/20 within 3 SE (worst " << worst_z << " SE)";
  v.require(within == 20, "all 20 linear models within 3 SE");

  SeededRng drng(31, 0);
  const DifferentiableModel cubic = cubic_model();
  const auto data = make_theorem_dataset(cubic, 16, 0.1, drng);
  const std::vector<double> etas = {0.1, 0.05, 0.025};
  std::vector<double> gaps;
  TheoremOptions opt;
  opt.estimator = TheoremEstimator::kControlVariate;
  for (double eta : etas) {
    SeededRng rng(32, 0);
    gaps.push_back(verify_theorem(cubic, data, eta, 100000, rng, opt).gap);
  }
  const double slope = log_log_slope(etas, gaps);
  v.detail << "; cubic gaps " << gaps[0] << ", " << gaps[1] << ", " << gaps[2] << ", slope " << slope;
  v.require(slope >= 2.5, "cubic gap slope >= 2.5");
  const double secs = elapsed(t0);
  v.detail << "; " << secs << " s";
  v.require(secs < 120.0, "runtime < 2 min");
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[fs::relative(e.path(), root).string()] = {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  return out;
}

void determinism(Verdict& v) {
  const fs::path work = testing::scratch_dir("determinism");
  for (const auto& name : testing::fixture_names()) write_frame_dir(work / "in" / name, testing::fixture_clip(name, 3));
  std::ofstream(work / "config.json") << config_to_json(PipelineConfig{}).dump(2);
  std::ostringstream sink;
  int rc = 0;
  for (const char* out : {"a", "b"}) rc |= cmd_degrade({work / "in", work / out, work / "config.json", 42, std::nullopt, 2}, sink, sink);
  v.require(rc == 0, "degrade runs succeed");
  const auto a = read_tree(work / "a");
  const auto b = read_tree(work / "b");
  v.detail << a.size() << " files per tree, identical: " << (a == b ? "yes" : "no");
  v.require(!a.empty() && a == b, "byte-identical output trees and manifests");

  std::ifstream in(work / "a" / kManifestFileName);
  const Manifest m = manifest_from_json(Json::parse(in));
  int replayed = 0;
  for (const auto& e : m.result.entries) {
    const Clip out = replay(read_frame_dir(work / "in" / e.name), *e.plan, m.config);
    const fs::path tmp = work / "replay" / e.name;
    write_frame_dir(tmp, out);
    replayed += read_tree(tmp) == read_tree(work / "a" / e.name);
  }
  v.detail << "; manifest replay exact on " << replayed << "/" << m.result.entries.size() << " clips";
  v.require(replayed == static_cast<int>(m.result.entries.size()), "replay reproduces every clip");
}

void order_sensitivity(Verdict& v) {
  const Frame x = testing::fixture("astronaut");
  const Clip clip({x});
  auto plan_of = [](bool gaussian_first) {
    PipelinePlan p;
    p.stages.push_back({DegradationType::kGaussian, {GaussianNoiseSpec{10.0}}});
    p.stages.push_back({DegradationType::kJpeg, {JpegSpec{50}}});
    p.order = gaussian_first ? std::vector<std::size_t>{0, 1} : std::vector<std::size_t>{1, 0};
    return p;
  };
  auto hist = [&](bool gaussian_first, std::uint64_t seed) {
    return stats(residual(apply_plan(clip, plan_of(gaussian_first), SeededRng(seed, 0))[0], x));
  };
  double floor = 0.0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    floor = std::max(floor, chi_square_distance(hist(true, s), hist(true, s + 1000)));
    floor = std::max(floor, chi_square_distance(hist(false, s), hist(false, s + 1000)));
  }
  const double d = chi_square_distance(hist(true, 1), hist(false, 1));
  v.detail << "chi-square distance " << d << " vs Monte-Carlo floor " << floor << " (max over 20 same-order pairs)";
  v.require(d > floor, "order distance above noise floor");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"AWGN fidelity", awgn},
      {"Poisson fidelity", poisson},
      {"Speckle fidelity", speckle},
      {"ISP round trip and raw noise model", isp},
      {"JPEG tables, monotonicity, blockiness", jpeg},
      {"Builtin video codec", video},
      {"Blur kernels", kernels},
      {"Downscaling removes noise", downscale},
      {"Shuffle enlarges degradation variance", shuffle_variance},
      {"Noise-injection expansion", theorem},
      {"Determinism and replay", determinism},
      {"Order sensitivity", order_sensitivity},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    failures += !v.pass;
    std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
