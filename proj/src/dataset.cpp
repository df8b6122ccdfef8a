#include "tdl/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include "tdl/errors.hpp"
#include "tdl/hash.hpp"
#include "tdl/image.hpp"
#include "tdl/io_util.hpp"
#include "tdl/parallel.hpp"

namespace tdl {

namespace fs = std::filesystem;

DatasetLayout parse_layout(const std::string& name) {
  if (name == "prid2011-style") return DatasetLayout::Prid2011;
  if (name == "ilids-style") return DatasetLayout::Ilids;
  if (name == "flat") return DatasetLayout::Flat;
  throw ConfigError("unknown dataset layout '" + name +
                    "' (expected prid2011-style, ilids-style, or flat)");
}

namespace {

bool is_frame_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".bmp";
}

std::vector<fs::path> sorted_subdirs(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> sorted_frames(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_frame_file(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void append_entry(std::vector<ManifestEntry>& entries, const std::string& person,
                  const std::string& camera, const fs::path& dir) {
  const auto frames = sorted_frames(dir);
  entries.push_back({person, camera, dir, static_cast<int>(frames.size())});
}

}  // namespace

DatasetManifest scan_dataset(const fs::path& root, DatasetLayout layout, int min_frames) {
  if (!fs::exists(root) || !fs::is_directory(root)) {
    throw IoError("dataset root is not a directory: " + root.string());
  }

  std::vector<ManifestEntry> entries;
  switch (layout) {
    case DatasetLayout::Prid2011:
    case DatasetLayout::Ilids: {
      fs::path base = root;
      if (layout == DatasetLayout::Ilids) {
        base = root / "sequences";
        if (!fs::is_directory(base)) {
          throw IoError("ilids-style root must contain a 'sequences' directory: " + root.string());
        }
      }
      for (const fs::path& cam_dir : sorted_subdirs(base)) {
        const std::string camera = cam_dir.filename().string();
        for (const fs::path& person_dir : sorted_subdirs(cam_dir)) {
          append_entry(entries, person_dir.filename().string(), camera, person_dir);
        }
      }
      break;
    }
    case DatasetLayout::Flat: {
      for (const fs::path& dir : sorted_subdirs(root)) {
        const std::string name = dir.filename().string();
        const std::size_t sep = name.find("__");
        if (sep == std::string::npos || sep == 0 || sep + 2 >= name.size()) {
          throw ProtocolError("flat layout entry '" + name +
                              "' does not match <person>__<camera>");
        }
        append_entry(entries, name.substr(0, sep), name.substr(sep + 2), dir);
      }
      break;
    }
  }

  if (entries.empty()) {
    throw ProtocolError("no sequences found under " + root.string());
  }
  std::erase_if(entries, [&](const ManifestEntry& e) { return e.frame_count < min_frames; });
  if (entries.empty()) {
    throw ProtocolError("no sequences with at least " + std::to_string(min_frames) +
                        " frames under " + root.string());
  }
  std::sort(entries.begin(), entries.end(), [](const ManifestEntry& a, const ManifestEntry& b) {
    return std::tie(a.person_id, a.camera_id) < std::tie(b.person_id, b.camera_id);
  });

  DatasetManifest manifest;
  manifest.name = root.filename().string();
  manifest.min_frames = min_frames;
  manifest.entries = std::move(entries);
  return manifest;
}

namespace {
constexpr char kStoreMagic[4] = {'T', 'D', 'L', 'F'};
constexpr std::uint32_t kStoreVersion = 1;
}  // namespace

std::vector<std::string> FeatureStore::identities() const {
  std::set<std::string> ids;
  for (const LabeledSample& r : records) ids.insert(r.person_id);
  return {ids.begin(), ids.end()};
}

std::vector<std::string> FeatureStore::cameras() const {
  std::set<std::string> ids;
  for (const LabeledSample& r : records) ids.insert(r.camera_id);
  return {ids.begin(), ids.end()};
}

void save_store(const FeatureStore& store, const fs::path& path) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open store file for writing: " + tmp.string());
    out.write(kStoreMagic, 4);
    io::write_u32(out, kStoreVersion);
    io::write_u32(out, static_cast<std::uint32_t>(store.dim));
    io::write_u32(out, static_cast<std::uint32_t>(store.records.size()));
    io::write_string(out, store.preset_name);
    io::write_string(out, store.preset_hash);
    io::write_string(out, store.source_hash);
    for (const LabeledSample& r : store.records) {
      io::write_string(out, r.person_id);
      io::write_string(out, r.camera_id);
      for (Eigen::Index i = 0; i < r.feature.size(); ++i) io::write_f64(out, r.feature(i));
    }
    if (!out) throw IoError("failed writing store file: " + tmp.string());
  }
  fs::rename(tmp, path);
}

FeatureStore load_store(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open store file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kStoreMagic, 4) != 0) {
    throw IoError("not a TDLF store file: " + path.string());
  }
  FeatureStore store;
  store.version = io::read_u32(in, path);
  if (store.version != kStoreVersion) {
    throw IoError("unsupported TDLF version " + std::to_string(store.version) + ": " +
                  path.string());
  }
  store.dim = io::read_u32(in, path);
  const std::uint32_t count = io::read_u32(in, path);
  store.preset_name = io::read_string(in, path);
  store.preset_hash = io::read_string(in, path);
  store.source_hash = io::read_string(in, path);
  store.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    LabeledSample s;
    s.person_id = io::read_string(in, path);
    s.camera_id = io::read_string(in, path);
    s.feature.resize(store.dim);
    for (Eigen::Index j = 0; j < store.dim; ++j) s.feature(j) = io::read_f64(in, path);
    if (!s.feature.allFinite()) {
      throw IoError("store record " + std::to_string(i) + " has non-finite features: " +
                    path.string());
    }
    store.records.push_back(std::move(s));
  }
  return store;
}

void export_store_csv(const FeatureStore& store, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open csv file for writing: " + path.string());
  out << "person_id,camera_id";
  for (Eigen::Index i = 0; i < store.dim; ++i) out << ",v" << i;
  out << '\n';
  char buf[64];
  for (const LabeledSample& r : store.records) {
    out << r.person_id << ',' << r.camera_id;
    for (Eigen::Index i = 0; i < r.feature.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", r.feature(i));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing csv file: " + path.string());
}

namespace {

// Cache key over the extraction inputs: per entry the identity, camera, and
// the frame file names and sizes.
std::string manifest_source_hash(const DatasetManifest& manifest) {
  Fnv1a64 h;
  h.update(static_cast<std::uint64_t>(manifest.entries.size()));
  for (const ManifestEntry& e : manifest.entries) {
    h.update(e.person_id).update("|").update(e.camera_id).update("|");
    for (const fs::path& f : sorted_frames(e.frame_dir)) {
      h.update(f.filename().string());
      h.update(static_cast<std::uint64_t>(fs::file_size(f)));
    }
  }
  return h.hex();
}

}  // namespace

ExtractResult extract_and_cache(const DatasetManifest& manifest, const DescriptorPreset& preset,
                                const fs::path& store_path, int threads) {
  if (manifest.entries.empty()) throw ProtocolError("manifest has no entries");
  const std::string preset_hash = preset.content_hash();
  const std::string source_hash = manifest_source_hash(manifest);

  if (fs::exists(store_path)) {
    FeatureStore existing;
    bool readable = true;
    try {
      existing = load_store(store_path);
    } catch (const IoError&) {
      readable = false;  // stale or corrupt cache: rebuild
    }
    if (readable) {
      if (existing.preset_hash != preset_hash) {
        throw ProtocolError("store " + store_path.string() +
                            " was built with a different descriptor preset (" +
                            existing.preset_name + "/" + existing.preset_hash +
                            "); refusing to mix");
      }
      if (existing.source_hash == source_hash) {
        return {std::move(existing), true};
      }
    }
  }

  std::vector<LabeledSample> records(manifest.entries.size());
  parallel_for(manifest.entries.size(), threads, [&](std::size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    const auto frame_paths = sorted_frames(e.frame_dir);
    if (frame_paths.size() < 2) {
      throw ProtocolError("video " + e.frame_dir.string() + " has fewer than 2 frames");
    }
    std::vector<Image> frames;
    frames.reserve(frame_paths.size());
    for (const fs::path& f : frame_paths) frames.push_back(load_image(f));
    records[i] = {video_descriptor(frames, preset).combined, e.person_id, e.camera_id};
  });

  FeatureStore store;
  store.preset_name = preset.name;
  store.preset_hash = preset_hash;
  store.source_hash = source_hash;
  store.dim = records.front().feature.size();
  store.records = std::move(records);
  save_store(store, store_path);
  return {std::move(store), false};
}

void SynthConfig::validate() const {
  if (num_identities < 1) throw ConfigError("num_identities must be >= 1");
  if (samples_per_identity < 1) throw ConfigError("samples_per_identity must be >= 1");
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (informative_dim < 0 || informative_dim > dim) {
    throw ConfigError("informative_dim must be in [0, dim]");
  }
  for (double s : {intra_class_noise_scale, inter_class_separation, distractor_noise_scale}) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("synthetic scales must be finite and >= 0");
  }
}

std::vector<LabeledSample> generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<LabeledSample> samples;
  samples.reserve(static_cast<std::size_t>(cfg.num_identities) * cfg.samples_per_identity);
  char name[32];
  for (int id = 0; id < cfg.num_identities; ++id) {
    Eigen::VectorXd proto = Eigen::VectorXd::Zero(cfg.dim);
    for (int j = 0; j < cfg.informative_dim; ++j) {
      proto(j) = cfg.inter_class_separation * normal(rng);
    }
    std::snprintf(name, sizeof name, "id_%04d", id);
    for (int m = 0; m < cfg.samples_per_identity; ++m) {
      Eigen::VectorXd v = proto;
      for (int j = 0; j < cfg.informative_dim; ++j) {
        v(j) += cfg.intra_class_noise_scale * normal(rng);
      }
      for (int j = cfg.informative_dim; j < cfg.dim; ++j) {
        v(j) = cfg.distractor_noise_scale * normal(rng);
      }
      samples.push_back({std::move(v), name, m % 2 == 0 ? "cam_a" : "cam_b"});
    }
  }
  return samples;
}

FeatureStore synthetic_store(const SynthConfig& cfg) {
  Fnv1a64 h;
  h.update("synthetic|");
  for (std::uint64_t v :
       {static_cast<std::uint64_t>(cfg.num_identities),
        static_cast<std::uint64_t>(cfg.samples_per_identity), static_cast<std::uint64_t>(cfg.dim),
        static_cast<std::uint64_t>(cfg.informative_dim), cfg.rng_seed}) {
    h.update(v);
  }
  h.update(cfg.intra_class_noise_scale)
      .update(cfg.inter_class_separation)
      .update(cfg.distractor_noise_scale);

  FeatureStore store;
  store.preset_name = "synthetic";
  store.preset_hash = h.hex();
  store.source_hash = h.hex();
  store.dim = cfg.dim;
  store.records = generate_synthetic(cfg);
  return store;
}

PreprocessOp parse_preprocess_op(const std::string& name) {
  if (name == "l1-normalize") return PreprocessOp::L1Normalize;
  if (name == "l2-normalize") return PreprocessOp::L2Normalize;
  if (name == "zscore") return PreprocessOp::Zscore;
  throw ConfigError("unknown preprocess option '" + name +
                    "' (expected l1-normalize, l2-normalize, or zscore)");
}

namespace {

void normalize_in_place(Eigen::VectorXd& v, PreprocessOp op) {
  const double norm = op == PreprocessOp::L1Normalize ? v.cwiseAbs().sum() : v.norm();
  if (norm > 0.0) v /= norm;  // zero vectors pass through
}

}  // namespace

PreprocessParams fit_preprocess(const PreprocessOptions& options,
                                const std::vector<LabeledSample>& fit_samples) {
  PreprocessParams params;
  params.ops = options.ops;
  const bool needs_fit =
      std::find(options.ops.begin(), options.ops.end(), PreprocessOp::Zscore) != options.ops.end();
  if (!needs_fit) return params;
  if (fit_samples.empty()) throw InvalidInputError("fit_preprocess: empty fitting set");

  const Eigen::Index d = fit_samples.front().feature.size();
  std::vector<Eigen::VectorXd> work;
  work.reserve(fit_samples.size());
  for (const LabeledSample& s : fit_samples) {
    if (s.feature.size() != d) throw InvalidInputError("fit_preprocess: inconsistent dimensions");
    work.push_back(s.feature);
  }

  for (PreprocessOp op : options.ops) {
    if (op == PreprocessOp::Zscore) {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
      for (const auto& v : work) mean += v;
      mean /= static_cast<double>(work.size());
      Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
      for (const auto& v : work) var += (v - mean).cwiseAbs2();
      var /= static_cast<double>(work.size());
      Eigen::VectorXd scale(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        scale(i) = var(i) > 0.0 ? std::sqrt(var(i)) : 1.0;
      }
      params.mean = mean;
      params.scale = scale;
      for (auto& v : work) v = (v - mean).cwiseQuotient(scale);
    } else {
      for (auto& v : work) normalize_in_place(v, op);
    }
  }
  return params;
}

std::vector<LabeledSample> apply_preprocess(const std::vector<LabeledSample>& samples,
                                            const PreprocessParams& params) {
  std::vector<LabeledSample> out = samples;
  for (LabeledSample& s : out) {
    for (PreprocessOp op : params.ops) {
      if (op == PreprocessOp::Zscore) {
        if (params.mean.size() != s.feature.size()) {
          throw InvalidInputError("apply_preprocess: zscore params dimension mismatch");
        }
        s.feature = (s.feature - params.mean).cwiseQuotient(params.scale);
      } else {
        normalize_in_place(s.feature, op);
      }
    }
  }
  return out;
}

}  // namespace tdl
