// End-to-end checks of the tdl binary: command flows, outputs, and exit
// codes. These need the TDL_CLI environment variable (set by ctest); when
// it is absent the cases are vacuously skipped.

#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tdl/dataset.hpp"
#include "tdl/image.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

const char* cli_path() {
  static const char* path = std::getenv("TDL_CLI");
  return (path != nullptr && fs::exists(path)) ? path : nullptr;
}

RunResult run_cli(const std::string& args) {
  RunResult result;
  const std::string cmd = std::string(cli_path()) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[512];
  while (fgets(buf, sizeof buf, pipe) != nullptr) result.output += buf;
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("tdl_cli_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_toy_tree(const fs::path& root, int persons, int frames) {
  for (int p = 0; p < persons; ++p) {
    for (const char* cam : {"cam_a", "cam_b"}) {
      char person[32];
      std::snprintf(person, sizeof person, "person_%04d", p);
      const fs::path dir = root / cam / person;
      fs::create_directories(dir);
      for (int f = 0; f < frames; ++f) {
        tdl::Image img;
        img.height = 32;
        img.width = 16;
        img.pixels.assign(32 * 16 * 3, 0);
        for (int y = 0; y < 32; ++y) {
          for (int x = 0; x < 16; ++x) {
            img.at(y, x, 0) = static_cast<std::uint8_t>(40 * p + (cam[4] == 'a' ? 0 : 17));
            img.at(y, x, 1) = static_cast<std::uint8_t>((x * 16 + f * 4) % 256);
            img.at(y, x, 2) = static_cast<std::uint8_t>((y * 8 + p * 32) % 256);
          }
        }
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04d.bmp", f);
        tdl::save_bmp(img, dir / name);
      }
    }
  }
}

void write_config(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2);
}

}  // namespace

TEST_CASE("cli extract, rerun cache, and export-csv") {
  if (cli_path() == nullptr) return;
  TempDir tmp("extract");
  write_toy_tree(tmp.path / "data", 2, 3);
  const fs::path cfg = tmp.path / "config.json";
  write_config(cfg, json{{"dataset", {{"root", (tmp.path / "data").string()},
                                      {"layout", "prid2011-style"},
                                      {"min_frames", 2}}},
                         {"output_dir", (tmp.path / "out").string()}});

  const RunResult first = run_cli("--config " + cfg.string() + " extract");
  CHECK(first.exit_code == 0);
  CHECK(first.output.find("records: 4") != std::string::npos);
  CHECK(first.output.find("dim: 2905") != std::string::npos);
  REQUIRE(fs::exists(tmp.path / "out" / "features.tdlf"));
  REQUIRE(fs::exists(tmp.path / "out" / "config_snapshot.json"));
  REQUIRE(fs::exists(tmp.path / "out" / "run_manifest.json"));

  const auto bytes_before = fs::file_size(tmp.path / "out" / "features.tdlf");
  const RunResult rerun = run_cli("--config " + cfg.string() + " extract");
  CHECK(rerun.exit_code == 0);
  CHECK(rerun.output.find("cache hit") != std::string::npos);
  CHECK(fs::file_size(tmp.path / "out" / "features.tdlf") == bytes_before);

  const RunResult exported =
      run_cli("export-csv " + (tmp.path / "out" / "features.tdlf").string());
  CHECK(exported.exit_code == 0);
  std::ifstream csv(tmp.path / "out" / "features.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("person_id,camera_id,v0,", 0) == 0);
}

TEST_CASE("cli train records defaults in the snapshot") {
  if (cli_path() == nullptr) return;
  TempDir tmp("train");
  const fs::path cfg = tmp.path / "config.json";
  write_config(cfg, json{{"synth",
                          {{"num_identities", 8},
                           {"samples_per_identity", 2},
                           {"dim", 10},
                           {"informative_dim", 5},
                           {"rng_seed", 3}}},
                         {"train", {{"max_iters", 30}}},
                         {"output_dir", (tmp.path / "out").string()}});

  CHECK(run_cli("--config " + cfg.string() + " synth").exit_code == 0);
  const RunResult trained = run_cli("--config " + cfg.string() + " train");
  CHECK(trained.exit_code == 0);
  CHECK(trained.output.find("final loss") != std::string::npos);
  REQUIRE(fs::exists(tmp.path / "out" / "metric.tdlm"));
  REQUIRE(fs::exists(tmp.path / "out" / "train_report.json"));

  std::ifstream snap_file(tmp.path / "out" / "config_snapshot.json");
  json snap;
  snap_file >> snap;
  CHECK(snap["train"]["alpha"] == 0.1);
  CHECK(snap["train"]["rho"] == 1.0);
  CHECK(snap["train"]["lambda0"] == 1e-3);
  CHECK(snap["train"]["lambda_up"] == 1.01);
  CHECK(snap["train"]["lambda_down"] == 0.5);

  std::ifstream report_file(tmp.path / "out" / "train_report.json");
  json report;
  report_file >> report;
  CHECK(report["loss_trace"].size() >= 2);
  CHECK(report["seconds"].get<double>() >= 0.0);

  // metric export-csv path
  const RunResult exported =
      run_cli("export-csv " + (tmp.path / "out" / "metric.tdlm").string());
  CHECK(exported.exit_code == 0);
}

TEST_CASE("cli benchmark prints a full rank table and writes three CSV rows") {
  if (cli_path() == nullptr) return;
  TempDir tmp("bench");
  const fs::path cfg = tmp.path / "config.json";
  // zero intra-class noise: gallery features equal probe features, so
  // euclidean must reach rank-1 100%
  write_config(cfg, json{{"synth",
                          {{"num_identities", 10},
                           {"samples_per_identity", 2},
                           {"dim", 8},
                           {"informative_dim", 8},
                           {"intra_class_noise_scale", 0.0},
                           {"distractor_noise_scale", 0.0},
                           {"rng_seed", 5}}},
                         {"train", {{"max_iters", 20}}},
                         {"protocol", {{"num_trials", 3}, {"seed", 11}}},
                         {"methods", json::array({"tdl", "euclidean", "l1norm"})},
                         {"output_dir", (tmp.path / "out").string()}});

  CHECK(run_cli("--config " + cfg.string() + " synth").exit_code == 0);
  const RunResult bench = run_cli("--config " + cfg.string() + " benchmark");
  CHECK(bench.exit_code == 0);
  CHECK(bench.output.find("euclidean") != std::string::npos);

  std::ifstream table(tmp.path / "out" / "table.csv");
  std::string line;
  int rows = 0;
  bool euclidean_perfect = false;
  std::getline(table, line);
  CHECK(line == "method,rank1,rank5,rank10,rank20,auc");
  while (std::getline(table, line)) {
    ++rows;
    if (line.rfind("euclidean,1.000000,", 0) == 0) euclidean_perfect = true;
  }
  CHECK(rows == 3);
  CHECK(euclidean_perfect);
  CHECK(fs::exists(tmp.path / "out" / "cmc.csv"));
  CHECK(fs::exists(tmp.path / "out" / "benchmark.json"));
}

TEST_CASE("cli sweep-alpha flags the degenerate point and matches benchmark at 0.1") {
  if (cli_path() == nullptr) return;
  TempDir tmp("sweep");
  const fs::path cfg = tmp.path / "config.json";
  write_config(cfg, json{{"synth",
                          {{"num_identities", 10},
                           {"samples_per_identity", 2},
                           {"dim", 8},
                           {"informative_dim", 4},
                           {"rng_seed", 6}}},
                         {"train", {{"max_iters", 30}, {"rng_seed", 21}}},
                         {"protocol", {{"num_trials", 2}, {"seed", 13}}},
                         {"methods", json::array({"tdl"})},
                         {"output_dir", (tmp.path / "out").string()}});

  CHECK(run_cli("--config " + cfg.string() + " synth").exit_code == 0);
  CHECK(run_cli("--config " + cfg.string() + " benchmark").exit_code == 0);
  const RunResult swept = run_cli("--config " + cfg.string() + " sweep-alpha --alphas 0,0.1");
  CHECK(swept.exit_code == 0);

  std::ifstream sweep_csv(tmp.path / "out" / "sweep.csv");
  std::string header, row0, row01;
  std::getline(sweep_csv, header);
  std::getline(sweep_csv, row0);
  std::getline(sweep_csv, row01);
  CHECK(header == "alpha,mean_auc,mean_rank1,note");
  CHECK(row0.find("degenerate") != std::string::npos);
  CHECK(row0.rfind("0,", 0) == 0);

  // the alpha=0.1 sweep row reproduces the benchmark tdl row
  std::ifstream table(tmp.path / "out" / "table.csv");
  std::string tline;
  std::getline(table, tline);
  std::getline(table, tline);  // tdl row
  const std::string auc_from_table = tline.substr(tline.rfind(',') + 1);
  CHECK(row01.find("," + auc_from_table + ",") != std::string::npos);
}

TEST_CASE("cli synth allows paper-scale dimensions and is seed-stable") {
  if (cli_path() == nullptr) return;
  TempDir tmp("synthdim");
  const fs::path cfg = tmp.path / "config.json";
  write_config(cfg, json{{"synth",
                          {{"num_identities", 4},
                           {"samples_per_identity", 2},
                           {"dim", 2905},
                           {"informative_dim", 64},
                           {"rng_seed", 2}}},
                         {"output_dir", (tmp.path / "out").string()}});
  const RunResult a = run_cli("--config " + cfg.string() + " synth");
  CHECK(a.exit_code == 0);
  CHECK(a.output.find("records: 8") != std::string::npos);
  CHECK(a.output.find("dim: 2905") != std::string::npos);

  std::ifstream f1(tmp.path / "out" / "features.tdlf", std::ios::binary);
  std::stringstream s1;
  s1 << f1.rdbuf();
  CHECK(run_cli("--config " + cfg.string() + " synth").exit_code == 0);
  std::ifstream f2(tmp.path / "out" / "features.tdlf", std::ios::binary);
  std::stringstream s2;
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
}

TEST_CASE("cli exit codes distinguish error classes") {
  if (cli_path() == nullptr) return;
  TempDir tmp("errors");
  const fs::path cfg = tmp.path / "config.json";

  // io error: dataset root missing (exit 3, path in the message)
  const fs::path missing_root = tmp.path / "does_not_exist";
  write_config(cfg, json{{"dataset", {{"root", missing_root.string()}}},
                         {"output_dir", (tmp.path / "out").string()}});
  const RunResult io_err = run_cli("--config " + cfg.string() + " extract");
  CHECK(io_err.exit_code == 3);
  CHECK(io_err.output.find(missing_root.string()) != std::string::npos);

  // config error: unknown key (exit 2)
  write_config(cfg, json{{"trian", json::object()}});
  CHECK(run_cli("--config " + cfg.string() + " extract").exit_code == 2);

  // config error: missing synth section (exit 2)
  write_config(cfg, json{{"output_dir", (tmp.path / "out").string()}});
  CHECK(run_cli("--config " + cfg.string() + " synth").exit_code == 2);

  // protocol error: empty dataset root (exit 4)
  fs::create_directories(tmp.path / "empty");
  write_config(cfg, json{{"dataset", {{"root", (tmp.path / "empty").string()}}},
                         {"output_dir", (tmp.path / "out").string()}});
  CHECK(run_cli("--config " + cfg.string() + " extract").exit_code == 4);

  // io error: missing store (exit 3)
  write_config(cfg, json{{"output_dir", (tmp.path / "out").string()}});
  CHECK(run_cli("--config " + cfg.string() + " train").exit_code == 3);

  // protocol error: benchmark on a single-camera store (exit 4)
  write_config(cfg, json{{"synth",
                          {{"num_identities", 6},
                           {"samples_per_identity", 1},
                           {"dim", 4},
                           {"informative_dim", 2},
                           {"rng_seed", 1}}},
                         {"output_dir", (tmp.path / "single").string()}});
  CHECK(run_cli("--config " + cfg.string() + " synth").exit_code == 0);
  CHECK(run_cli("--config " + cfg.string() + " benchmark").exit_code == 4);
}
