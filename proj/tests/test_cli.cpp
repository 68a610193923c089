#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "test_support.hpp"
#include "vdegrade/cli.hpp"
#include "vdegrade/serialization.hpp"

using namespace vdegrade;
namespace fs = std::filesystem;

namespace {

// Dataset root with one 2-frame PNG clip per fixture name.
fs::path make_dataset(const std::string& leaf, const std::vector<std::string>& names, int frames = 2) {
  const fs::path root = testing::scratch_dir(leaf);
  for (const auto& n : names) write_frame_dir(root / n, testing::fixture_clip(n, frames));
  return root;
}

fs::path write_config(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> contents for every regular file under root.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage = {"vdegrade"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

const char* kIdentityConfig = R"({"version": 1, "degradations": {"gaussian": {"sigma": [0, 0]}}})";
const char* kAwgn25Config = R"({"version": 1, "degradations": {"gaussian": {"sigma": [25, 25], "grayscale_probability": 0}}})";

}  // namespace

TEST_CASE("degrade: identity config reproduces the 8-bit inputs") {
  const fs::path in = make_dataset("cli_identity_in", {"camera", "coffee"});
  const fs::path out = testing::scratch_dir("cli_identity_out");
  const fs::path cfg = write_config(out.parent_path() / "identity.json", kIdentityConfig);
  std::ostringstream o, e;
  REQUIRE(cmd_degrade({in, out, cfg, 5, std::nullopt, 1}, o, e) == kExitOk);
  for (const auto& n : {"camera", "coffee"}) CHECK(read_frame_dir(out / n) == read_frame_dir(in / n));
  CHECK(fs::exists(out / kManifestFileName));
}

TEST_CASE("degrade: determinism, jobs independence and replay") {
  const std::vector<std::string> names = {"astronaut", "camera", "chelsea", "coffee", "immunohistochemistry", "rocket"};
  const fs::path in = make_dataset("cli_det_in", names);
  const fs::path cfg = write_config(in.parent_path() / "full.json", config_to_json(PipelineConfig{}).dump(2));
  const fs::path a = testing::scratch_dir("cli_det_a");
  const fs::path b = testing::scratch_dir("cli_det_b");
  const fs::path c = testing::scratch_dir("cli_det_c");
  std::ostringstream o, e;
  REQUIRE(cmd_degrade({in, a, cfg, 77, std::nullopt, 1}, o, e) == kExitOk);
  REQUIRE(cmd_degrade({in, b, cfg, 77, std::nullopt, 1}, o, e) == kExitOk);
  REQUIRE(cmd_degrade({in, c, cfg, 77, std::nullopt, 3}, o, e) == kExitOk);
  const auto ta = tree(a);
  CHECK(ta.size() == names.size() * 2 + 1);
  CHECK(ta == tree(b));
  CHECK(ta == tree(c));

  const Manifest m = manifest_from_json(Json::parse(read_file(a / kManifestFileName)));
  CHECK(m.config.seed == 77);
  REQUIRE(m.result.entries.size() == names.size());
  std::set<std::vector<std::size_t>> orders;
  for (const auto& entry : m.result.entries) {
    REQUIRE(entry.plan.has_value());
    std::vector<std::size_t> types;
    for (std::size_t p = 0; p < entry.plan->order.size(); ++p) types.push_back(static_cast<std::size_t>(entry.plan->applied(p).type));
    orders.insert(types);
    // Replay from the manifest, then compare after the same 8-bit write.
    const Clip clean = read_frame_dir(in / entry.name);
    const Clip replayed = replay(clean, *entry.plan, m.config);
    const fs::path tmp = testing::scratch_dir("cli_replay_" + entry.name);
    write_frame_dir(tmp, replayed);
    CHECK(read_frame_dir(tmp) == read_frame_dir(a / entry.name));
  }
  CHECK(orders.size() == names.size());

  const fs::path d = testing::scratch_dir("cli_det_d");
  REQUIRE(cmd_degrade({in, d, cfg, 78, std::nullopt, 1}, o, e) == kExitOk);
  CHECK(tree(d) != ta);
}

TEST_CASE("degrade: failures and usage errors") {
  const fs::path in = make_dataset("cli_fail_in", {"camera", "rocket"});
  std::ofstream(in / "rocket" / "frame_000001.png") << "corrupt";
  const fs::path cfg = write_config(in.parent_path() / "fail.json", kIdentityConfig);
  const fs::path out = testing::scratch_dir("cli_fail_out");
  std::ostringstream o, e;
  CHECK(cmd_degrade({in, out, cfg, 1, std::nullopt, 2}, o, e) == kExitFailure);
  const Json j = Json::parse(read_file(out / kManifestFileName));
  CHECK(j["failed"] == Json::array({"rocket"}));
  CHECK(j["clips"][0]["status"] == "ok");
  CHECK(fs::exists(out / "camera" / "frame_000001.png"));

  CHECK(cmd_degrade({in, out, in.parent_path() / "nope.json", 1, std::nullopt, 1}, o, e) == kExitUsage);
  const fs::path bad = write_config(in.parent_path() / "bad.json", R"({"version": 1, "sead": 3})");
  CHECK(cmd_degrade({in, out, bad, 1, std::nullopt, 1}, o, e) == kExitUsage);
  CHECK(cmd_degrade({in.parent_path() / "missing_dir", out, cfg, 1, std::nullopt, 1}, o, e) == kExitUsage);
}

TEST_CASE("stats: zero residuals, histogram sums, awgn oracle") {
  const fs::path clean = testing::scratch_dir("cli_stats_clean");
  for (int i = 0; i < 2; ++i) {
    write_frame_dir(clean / ("gray" + std::to_string(i)), testing::constant_clip(96, 96, 0.5, 2));
  }
  std::ostringstream csv, e;
  REQUIRE(cmd_stats(clean, clean, csv, e) == kExitOk);
  auto rows = parse_csv(csv.str());
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].size() == 5 + 201);
  CHECK(rows[0][5] == "bin_000");
  CHECK(rows[3][0] == "*");
  for (std::size_t r = 1; r < rows.size(); ++r) CHECK(std::stod(rows[r][4]) == 0.0);

  const fs::path cfg = write_config(clean.parent_path() / "awgn25.json", kAwgn25Config);
  const fs::path out = testing::scratch_dir("cli_stats_out");
  std::ostringstream o;
  REQUIRE(cmd_degrade({clean, out, cfg, 3, std::nullopt, 1}, o, e) == kExitOk);
  std::ostringstream csv2;
  REQUIRE(cmd_stats(clean, out, csv2, e) == kExitOk);
  rows = parse_csv(csv2.str());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::uint64_t total = 0;
    for (std::size_t k = 5; k < rows[r].size(); ++k) total += std::stoull(rows[r][k]);
    CHECK(total == std::stoull(rows[r][1]));
  }
  CHECK(std::stod(rows.back()[4]) == doctest::Approx(25.0 / 255.0).epsilon(0.02));

  // Recorded strength matches the measured one.
  const Manifest m = manifest_from_json(Json::parse(read_file(out / kManifestFileName)));
  const auto& spec = std::get<GaussianNoiseSpec>(m.result.entries[0].plan->stages[0].specs[0]);
  CHECK(std::stod(rows[1][4]) == doctest::Approx(spec.sigma_255 / 255.0).epsilon(0.02));

  const fs::path other = make_dataset("cli_stats_other", {"camera"});
  CHECK(cmd_stats(clean, other, csv2, e) == kExitUsage);
}

TEST_CASE("downscale-report csv") {
  const fs::path clean = make_dataset("cli_down_clean", {"chelsea"});
  const fs::path cfg = write_config(clean.parent_path() / "awgn50.json",
                                    R"({"version": 1, "clamp_each_stage": false,
                                        "degradations": {"gaussian": {"sigma": [50, 50], "grayscale_probability": 0}}})");
  const fs::path noisy = testing::scratch_dir("cli_down_noisy");
  std::ostringstream o, e, csv;
  REQUIRE(cmd_degrade({clean, noisy, cfg, 1, std::nullopt, 1}, o, e) == kExitOk);
  REQUIRE(cmd_downscale_report(clean, noisy, {0.25, 1.0, 0.5}, ResampleMode::kArea, csv, e) == kExitOk);
  const auto rows = parse_csv(csv.str());
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"clip", "scale", "mode", "psnr_db"});
  CHECK(rows[1][1] == "1");
  CHECK(rows[2][1] == "0.5");
  CHECK(rows[1][2] == "area");
  // Written outputs are clamped and 8-bit, so the gain is below the 6 dB of raw noise.
  CHECK(std::stod(rows[2][3]) >= std::stod(rows[1][3]) + 3.0);
  CHECK(std::stod(rows[3][3]) >= std::stod(rows[2][3]));
}

TEST_CASE("shuffle-variance csv and summary") {
  const fs::path clean = make_dataset("cli_shuffle", {"coffee", "rocket"}, 1);
  ShuffleVarianceOptions opt;
  opt.clean_dir = clean;
  opt.clip = "rocket";
  opt.pipelines = 6;
  opt.jobs = 2;
  opt.summary_path = clean.parent_path() / "shuffle_summary.json";
  std::ostringstream csv, e;
  REQUIRE(cmd_shuffle_variance(opt, csv, e) == kExitOk);
  const auto rows = parse_csv(csv.str());
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == std::vector<std::string>{"pipeline", "shuffled_std", "fixed_std"});
  const Json j = Json::parse(read_file(*opt.summary_path));
  CHECK(j["schema"] == "vdegrade.shuffle_variance");
  CHECK(j["clip"] == "rocket");
  CHECK(e.str().find("dispersion") != std::string::npos);
  opt.clip = "missing";
  CHECK(cmd_shuffle_variance(opt, csv, e) == kExitUsage);
}

TEST_CASE("verify-theorem csv and exit codes") {
  VerifyTheoremOptions opt;
  opt.n_mc = 20000;
  std::ostringstream csv, e;
  CHECK(cmd_verify_theorem(opt, csv, e) == kExitOk);
  const auto rows = parse_csv(csv.str());
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"eta", "lhs", "rhs", "gap", "standard_error", "estimator"});
  CHECK(rows[1][5] == "plain");

  opt.model = "cubic";
  std::ostringstream csv2;
  CHECK(cmd_verify_theorem(opt, csv2, e) == kExitOk);
  CHECK(parse_csv(csv2.str())[1][5] == "control_variate");

  opt.model = "resnet";
  CHECK(cmd_verify_theorem(opt, csv2, e) == kExitUsage);
  opt.model = "linear";
  opt.n_mc = 10;
  CHECK(cmd_verify_theorem(opt, csv2, e) == kExitUsage);
}

TEST_CASE("run_cli argument handling") {
  const fs::path in = make_dataset("cli_args_in", {"camera"}, 1);
  const fs::path out = testing::scratch_dir("cli_args_out");
  const fs::path cfg = write_config(in.parent_path() / "args.json", kIdentityConfig);
  CHECK(run({"degrade", in.string(), out.string()}) == kExitUsage);  // no --config
  CHECK(run({"frobnicate"}) == kExitUsage);
  CHECK(run({"degrade", in.string(), out.string(), "--config", cfg.string(), "--clamp-mode", "sometimes"}) == kExitUsage);
  CHECK(run({"degrade", in.string(), out.string(), "--config", cfg.string(), "--seed", "4", "--jobs", "2",
             "--clamp-mode", "final"}) == kExitOk);
  const Json j = Json::parse(read_file(out / kManifestFileName));
  CHECK(j["config"]["seed"] == 4);
  CHECK(j["config"]["clamp_each_stage"] == false);
  const fs::path csv = in.parent_path() / "theorem.csv";
  CHECK(run({"verify-theorem", "--model", "quadratic", "--eta", "0.1,0.05", "--n-mc", "5000", "--seed", "2", "-o",
             csv.string()}) == kExitOk);
  CHECK(parse_csv(read_file(csv)).size() == 3);
  CHECK(run({"verify-theorem", "--model", "resnet"}) == kExitUsage);
}

TEST_CASE("single-directory input is one clip") {
  const fs::path root = testing::scratch_dir("cli_flat");
  write_frame_dir(root, testing::fixture_clip("coffee", 2));
  const auto sources = resolve_clip_sources(root);
  REQUIRE(sources.size() == 1);
  CHECK(sources[0].name == "cli_flat");
}
