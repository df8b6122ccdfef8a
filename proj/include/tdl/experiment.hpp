#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdl/dataset.hpp"
#include "tdl/evaluation.hpp"
#include "tdl/optimizer.hpp"

namespace tdl {

/// Experiment description read from a JSON config file. Parsing is strict:
/// unknown keys anywhere are rejected so a mistyped hyperparameter cannot
/// silently fall back to a default.
struct ExperimentConfig {
  // dataset
  std::string dataset_root;
  std::string dataset_layout = "prid2011-style";
  int min_frames = 27;
  // features
  std::string feature_preset = "paper-2905";
  // preprocess
  std::vector<std::string> preprocess_options;
  // train
  TrainConfig train;
  // protocol
  int num_trials = 10;
  std::uint64_t protocol_seed = 0;
  std::string direction = "forward";
  // methods
  std::vector<std::string> methods = {"tdl", "euclidean", "l1norm"};
  // synth (only needed by the synth command)
  std::optional<SynthConfig> synth;

  std::string output_dir = "runs/out";

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::filesystem::path& path);

  /// Fully resolved snapshot (defaults filled in).
  nlohmann::json to_json() const;

  PreprocessOptions preprocess() const;
  ProtocolConfig protocol() const;
  Direction parsed_direction() const;
};

/// Named descriptor presets; "paper-2905" is the only built-in.
DescriptorPreset descriptor_preset(const std::string& name);

nlohmann::json train_report_to_json(const TrainReport& report);
nlohmann::json benchmark_reports_to_json(const std::vector<BenchmarkReport>& reports,
                                         const nlohmann::json& config_snapshot);

/// cmc.csv: method, rank, mean_rate, then one column per trial.
std::string benchmark_cmc_csv(const std::vector<BenchmarkReport>& reports);
/// table.csv: method, rank1, rank5, rank10, rank20, auc (fractions in [0,1]).
std::string benchmark_table_csv(const std::vector<BenchmarkReport>& reports);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace tdl
