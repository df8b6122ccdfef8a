#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tdl/features.hpp"
#include "tdl/metric.hpp"

namespace tdl {

struct ManifestEntry {
  std::string person_id;
  std::string camera_id;
  std::filesystem::path frame_dir;
  int frame_count = 0;
};

/// One video per (person, camera), sorted by person_id then camera_id.
struct DatasetManifest {
  std::string name;
  int min_frames = 0;
  std::vector<ManifestEntry> entries;
};

enum class DatasetLayout {
  Prid2011,  // root/<camera>/<person>/<frames>
  Ilids,     // root/sequences/<camera>/<person>/<frames>
  Flat,      // root/<person>__<camera>/<frames>
};

DatasetLayout parse_layout(const std::string& name);  // throws ConfigError

/// Walks the directory tree and keeps videos with at least `min_frames`
/// PNG/BMP frames. Throws IoError for a missing root, ProtocolError when
/// nothing passes the filter.
DatasetManifest scan_dataset(const std::filesystem::path& root, DatasetLayout layout,
                             int min_frames);

/// On-disk descriptor cache ("TDLF"; byte layout in docs/formats.md).
struct FeatureStore {
  std::uint32_t version = 1;
  std::string preset_name;
  std::string preset_hash;
  std::string source_hash;  // fingerprint of the inputs the store was built from
  Eigen::Index dim = 0;
  std::vector<LabeledSample> records;

  std::vector<std::string> identities() const;  // sorted, unique
  std::vector<std::string> cameras() const;     // sorted, unique
};

void save_store(const FeatureStore& store, const std::filesystem::path& path);
FeatureStore load_store(const std::filesystem::path& path);
void export_store_csv(const FeatureStore& store, const std::filesystem::path& path);

struct ExtractResult {
  FeatureStore store;
  bool cache_hit = false;
};

/// Computes one video descriptor per manifest entry and persists the store.
/// When `store_path` already holds a store built under the same preset from
/// unchanged inputs, returns it untouched (cache hit); a store built under a
/// different preset is refused. `threads` 0 means one worker per core.
ExtractResult extract_and_cache(const DatasetManifest& manifest, const DescriptorPreset& preset,
                                const std::filesystem::path& store_path, int threads = 0);

/// Synthetic labeled-sample generator for verification runs. Each identity
/// gets a prototype with `informative_dim` leading dimensions drawn at the
/// separation scale; samples add intra-class noise there and distractor
/// noise on the remaining dimensions. Cameras alternate cam_a/cam_b.
struct SynthConfig {
  int num_identities = 40;
  int samples_per_identity = 2;
  int dim = 50;
  int informative_dim = 10;
  double intra_class_noise_scale = 0.3;
  double inter_class_separation = 1.0;
  double distractor_noise_scale = 0.5;
  std::uint64_t rng_seed = 0;

  void validate() const;  // throws ConfigError
};

std::vector<LabeledSample> generate_synthetic(const SynthConfig& cfg);

/// Builds a store from synthetic samples (preset name "synthetic").
FeatureStore synthetic_store(const SynthConfig& cfg);

enum class PreprocessOp { L1Normalize, L2Normalize, Zscore };

PreprocessOp parse_preprocess_op(const std::string& name);  // throws ConfigError

struct PreprocessOptions {
  std::vector<PreprocessOp> ops;  // applied in order; empty = identity
};

/// Fitted transform. Z-score statistics come from the fitting set only, so
/// applying the params to a test split cannot leak its statistics.
struct PreprocessParams {
  std::vector<PreprocessOp> ops;
  Eigen::VectorXd mean;   // zscore stats (empty unless zscore is used)
  Eigen::VectorXd scale;  // per-dim std; zero-variance dims get 1
};

PreprocessParams fit_preprocess(const PreprocessOptions& options,
                                const std::vector<LabeledSample>& fit_samples);
std::vector<LabeledSample> apply_preprocess(const std::vector<LabeledSample>& samples,
                                            const PreprocessParams& params);

}  // namespace tdl
