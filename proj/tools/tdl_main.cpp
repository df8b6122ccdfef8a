// Command-line driver: extract features, train a metric, run the
// re-identification benchmark, sweep alpha, generate synthetic stores, and
// export binary files to CSV. See README.md for config and output layout.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdl/dataset.hpp"
#include "tdl/errors.hpp"
#include "tdl/evaluation.hpp"
#include "tdl/experiment.hpp"
#include "tdl/hash.hpp"
#include "tdl/metric.hpp"
#include "tdl/optimizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitProtocol = 4;
constexpr int kExitNumerical = 5;

struct GlobalOpts {
  std::string config_path;
  std::string output_dir;  // overrides config output_dir
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

tdl::ExperimentConfig load_config(const GlobalOpts& g) {
  if (g.config_path.empty()) throw tdl::ConfigError("--config is required for this command");
  tdl::ExperimentConfig cfg = tdl::ExperimentConfig::from_file(g.config_path);
  if (!g.output_dir.empty()) cfg.output_dir = g.output_dir;
  if (g.seed) {
    // one switch pins every random source for a fully reproducible run
    cfg.protocol_seed = *g.seed;
    cfg.train.rng_seed = *g.seed;
    if (cfg.synth) cfg.synth->rng_seed = *g.seed;
  }
  return cfg;
}

fs::path prepare_output_dir(const tdl::ExperimentConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  return dir;
}

void write_snapshot_and_manifest(const tdl::ExperimentConfig& cfg, const fs::path& out_dir,
                                 const std::string& command, const GlobalOpts& g,
                                 const std::vector<fs::path>& inputs,
                                 const std::vector<std::string>& outputs) {
  tdl::write_text_file(out_dir / "config_snapshot.json", cfg.to_json().dump(2) + "\n");
  json manifest;
  manifest["command"] = command;
  manifest["config"] = g.config_path;
  json in = json::array();
  for (const fs::path& p : inputs) {
    tdl::Fnv1a64 h;
    h.update(tdl::hash_file(p));
    in.push_back({{"path", p.string()}, {"fnv1a64", h.hex()}});
  }
  manifest["inputs"] = in;
  manifest["outputs"] = outputs;
  tdl::write_text_file(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
}

fs::path store_path_for(const tdl::ExperimentConfig& cfg, const std::string& override_path) {
  if (!override_path.empty()) return override_path;
  return fs::path(cfg.output_dir) / "features.tdlf";
}

int cmd_extract(const GlobalOpts& g) {
  const tdl::ExperimentConfig cfg = load_config(g);
  if (cfg.dataset_root.empty()) throw tdl::ConfigError("dataset.root is required for extract");
  const fs::path out_dir = prepare_output_dir(cfg);

  const tdl::DatasetManifest manifest =
      tdl::scan_dataset(cfg.dataset_root, tdl::parse_layout(cfg.dataset_layout), cfg.min_frames);
  const tdl::DescriptorPreset preset = tdl::descriptor_preset(cfg.feature_preset);
  const fs::path store_path = out_dir / "features.tdlf";
  const tdl::ExtractResult res =
      tdl::extract_and_cache(manifest, preset, store_path, g.threads);

  if (res.cache_hit) std::cout << "cache hit: store is up to date\n";
  std::cout << "store: " << store_path.string() << "\n"
            << "records: " << res.store.records.size() << "\n"
            << "dim: " << res.store.dim << "\n"
            << "preset: " << res.store.preset_name << " (" << res.store.preset_hash << ")\n";
  write_snapshot_and_manifest(cfg, out_dir, "extract", g, {store_path},
                              {"features.tdlf"});
  return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& store_override) {
  const tdl::ExperimentConfig cfg = load_config(g);
  const fs::path out_dir = prepare_output_dir(cfg);
  const fs::path store_path = store_path_for(cfg, store_override);

  const tdl::FeatureStore store = tdl::load_store(store_path);
  const tdl::PreprocessParams params =
      tdl::fit_preprocess(cfg.preprocess(), store.records);
  const std::vector<tdl::LabeledSample> samples = tdl::apply_preprocess(store.records, params);

  const tdl::TrainReport report = tdl::train(samples, cfg.train);
  const fs::path metric_path = out_dir / "metric.tdlm";
  tdl::save_metric(report.final_metric, metric_path);
  tdl::write_text_file(out_dir / "train_report.json",
                       tdl::train_report_to_json(report).dump(2) + "\n");

  std::printf("final loss: %.9g (initial %.9g)\n", report.loss_trace.back(),
              report.loss_trace.front());
  std::printf("iterations: %d (%zu accepted), converged: %s\n", report.iters_run,
              report.loss_trace.size() - 1, report.converged ? "yes" : "no");
  write_snapshot_and_manifest(cfg, out_dir, "train", g, {store_path, metric_path},
                              {"metric.tdlm", "train_report.json"});
  return 0;
}

void print_rank_table(const std::vector<tdl::BenchmarkReport>& reports) {
  std::printf("%-10s %8s %8s %8s %8s %8s\n", "method", "rank1", "rank5", "rank10", "rank20",
              "auc");
  for (const tdl::BenchmarkReport& r : reports) {
    std::printf("%-10s %8.2f %8.2f %8.2f %8.2f %8.4f\n", r.method.c_str(),
                100.0 * r.rank_rates[0], 100.0 * r.rank_rates[1], 100.0 * r.rank_rates[2],
                100.0 * r.rank_rates[3], r.mean_auc);
  }
}

int cmd_benchmark(const GlobalOpts& g, const std::string& store_override) {
  const tdl::ExperimentConfig cfg = load_config(g);
  const fs::path out_dir = prepare_output_dir(cfg);
  const fs::path store_path = store_path_for(cfg, store_override);

  const tdl::FeatureStore store = tdl::load_store(store_path);
  std::vector<tdl::BenchmarkReport> reports;
  for (const std::string& name : cfg.methods) {
    reports.push_back(
        tdl::run_benchmark(store, tdl::parse_method(name), cfg.protocol(), cfg.train));
  }

  tdl::write_text_file(out_dir / "benchmark.json",
                       tdl::benchmark_reports_to_json(reports, cfg.to_json()).dump(2) + "\n");
  tdl::write_text_file(out_dir / "cmc.csv", tdl::benchmark_cmc_csv(reports));
  tdl::write_text_file(out_dir / "table.csv", tdl::benchmark_table_csv(reports));

  std::printf("identities: %d, trials: %d, probe: %s, gallery: %s\n",
              reports.front().num_identities_used, cfg.num_trials,
              reports.front().probe_camera.c_str(), reports.front().gallery_camera.c_str());
  print_rank_table(reports);
  write_snapshot_and_manifest(cfg, out_dir, "benchmark", g, {store_path},
                              {"benchmark.json", "cmc.csv", "table.csv"});
  return 0;
}

int cmd_sweep_alpha(const GlobalOpts& g, const std::vector<double>& alphas,
                    const std::string& store_override) {
  if (alphas.empty()) throw tdl::ConfigError("--alphas needs at least one value");
  const tdl::ExperimentConfig cfg = load_config(g);
  const fs::path out_dir = prepare_output_dir(cfg);
  const fs::path store_path = store_path_for(cfg, store_override);
  const tdl::FeatureStore store = tdl::load_store(store_path);

  std::string csv = "alpha,mean_auc,mean_rank1,note\n";
  std::printf("%8s %10s %10s  %s\n", "alpha", "mean_auc", "rank1", "note");
  for (double alpha : alphas) {
    tdl::TrainConfig train_cfg = cfg.train;
    train_cfg.alpha = alpha;
    train_cfg.validate();
    const tdl::BenchmarkReport r =
        tdl::run_benchmark(store, tdl::Method::Tdl, cfg.protocol(), train_cfg);
    const char* note = alpha == 0.0 ? "degenerate" : "";
    char line[128];
    std::snprintf(line, sizeof line, "%.6g,%.6f,%.6f,%s\n", alpha, r.mean_auc, r.rank_rates[0],
                  note);
    csv += line;
    std::printf("%8.3g %10.4f %10.4f  %s\n", alpha, r.mean_auc, r.rank_rates[0], note);
  }
  tdl::write_text_file(out_dir / "sweep.csv", csv);
  write_snapshot_and_manifest(cfg, out_dir, "sweep-alpha", g, {store_path}, {"sweep.csv"});
  return 0;
}

int cmd_synth(const GlobalOpts& g) {
  const tdl::ExperimentConfig cfg = load_config(g);
  if (!cfg.synth) throw tdl::ConfigError("config needs a 'synth' section for this command");
  const fs::path out_dir = prepare_output_dir(cfg);

  const tdl::FeatureStore store = tdl::synthetic_store(*cfg.synth);
  const fs::path store_path = out_dir / "features.tdlf";
  tdl::save_store(store, store_path);
  std::cout << "store: " << store_path.string() << "\n"
            << "records: " << store.records.size() << "\n"
            << "dim: " << store.dim << "\n";
  write_snapshot_and_manifest(cfg, out_dir, "synth", g, {store_path}, {"features.tdlf"});
  return 0;
}

int cmd_export_csv(const std::string& input, std::string out_path) {
  const fs::path in_path(input);
  std::ifstream probe(in_path, std::ios::binary);
  if (!probe) throw tdl::IoError("cannot open input file: " + input);
  char magic[4] = {};
  probe.read(magic, 4);
  probe.close();

  if (out_path.empty()) out_path = (fs::path(input).replace_extension(".csv")).string();
  if (std::string(magic, 4) == "TDLF") {
    tdl::export_store_csv(tdl::load_store(in_path), out_path);
  } else if (std::string(magic, 4) == "TDLM") {
    tdl::export_metric_csv(tdl::load_metric(in_path), out_path);
  } else {
    throw tdl::IoError("input is neither a TDLF store nor a TDLM metric file: " + input);
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Top-push distance learning for video-based re-identification"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "Path to the experiment JSON config");
  app.add_option("--output", g.output_dir, "Output directory (overrides config output_dir)");
  std::uint64_t seed_opt = 0;
  auto* seed_flag = app.add_option("--seed", seed_opt, "Override every seed in the config");
  app.add_option("--threads", g.threads, "Worker threads for extraction (0 = auto)");

  auto* extract = app.add_subcommand("extract", "Scan a dataset and build the feature store");
  auto* train_cmd = app.add_subcommand("train", "Train a metric on a feature store");
  auto* benchmark = app.add_subcommand("benchmark", "Run the re-id protocol for each method");
  auto* sweep = app.add_subcommand("sweep-alpha", "Benchmark tdl across alpha values");
  auto* synth = app.add_subcommand("synth", "Generate a synthetic feature store");
  auto* export_csv = app.add_subcommand("export-csv", "Convert a TDLF/TDLM file to CSV");

  std::string store_override;
  for (CLI::App* sub : {train_cmd, benchmark, sweep}) {
    sub->add_option("--store", store_override,
                    "Feature store path (default: <output_dir>/features.tdlf)");
  }
  std::vector<double> alphas;
  sweep->add_option("--alphas", alphas, "Alpha values to sweep")->delimiter(',');

  std::string export_input, export_out;
  export_csv->add_option("input", export_input, "TDLF or TDLM file")->required();
  export_csv->add_option("--out", export_out, "Output CSV path");

  CLI11_PARSE(app, argc, argv);
  if (*seed_flag) g.seed = seed_opt;

  try {
    if (*extract) return cmd_extract(g);
    if (*train_cmd) return cmd_train(g, store_override);
    if (*benchmark) return cmd_benchmark(g, store_override);
    if (*sweep) return cmd_sweep_alpha(g, alphas, store_override);
    if (*synth) return cmd_synth(g);
    if (*export_csv) return cmd_export_csv(export_input, export_out);
  } catch (const tdl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tdl::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const tdl::ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const tdl::InvalidInputError& e) {
    // inconsistent inputs (e.g. metric/store dimension clash) surface here
    std::cerr << "protocol error: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const tdl::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
