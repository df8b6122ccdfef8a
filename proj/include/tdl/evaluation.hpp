#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tdl/dataset.hpp"
#include "tdl/metric.hpp"
#include "tdl/optimizer.hpp"

namespace tdl {

/// One train/test identity split. Train gets floor(n/2) identities, the
/// remainder goes to test.
struct TrialSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
};

/// Cumulative matching rates indexed by rank 1..G; non-decreasing, and 1 at
/// the last rank under the closed-set single-shot protocol.
struct CmcCurve {
  std::vector<double> rates;
};

enum class Method { Tdl, Euclidean, L1Norm };

Method parse_method(const std::string& name);  // throws ConfigError
std::string method_name(Method m);

enum class Direction { Forward, Reverse };  // probe camera first or second (sorted order)

struct ProtocolConfig {
  int num_trials = 10;
  std::uint64_t seed = 0;
  Direction direction = Direction::Forward;
  PreprocessOptions preprocess;
};

struct BenchmarkReport {
  std::string method;
  std::vector<CmcCurve> per_trial;
  CmcCurve mean_curve;                  // elementwise mean over trials
  std::vector<double> per_trial_auc;
  double mean_auc = 0.0;
  std::array<double, 4> rank_rates{};   // mean rates at ranks 1, 5, 10, 20
  int num_identities_used = 0;
  std::string probe_camera;
  std::string gallery_camera;
  std::vector<double> trial_train_seconds;
  double total_seconds = 0.0;
};

/// num_trials independent seeded half splits of the identity set.
std::vector<TrialSplit> make_splits(const std::vector<std::string>& identities, int num_trials,
                                    std::uint64_t seed);

/// Gallery indices sorted by ascending squared Mahalanobis distance to the
/// probe; ties break toward the smaller gallery index. The probe camera
/// must differ from every gallery camera.
std::vector<std::size_t> rank_gallery(const MetricMatrix& m, const LabeledSample& probe,
                                      const std::vector<LabeledSample>& gallery);

/// As rank_gallery with the elementwise L1 distance.
std::vector<std::size_t> l1_rank_gallery(const LabeledSample& probe,
                                         const std::vector<LabeledSample>& gallery);

/// rates[k-1] = fraction of probes whose correct gallery entry appears in
/// the top k. Requires every probe identity to appear exactly once in the
/// gallery (single-shot).
CmcCurve cmc(const MetricMatrix& m, const std::vector<LabeledSample>& probes,
             const std::vector<LabeledSample>& gallery);
CmcCurve cmc_l1(const std::vector<LabeledSample>& probes,
                const std::vector<LabeledSample>& gallery);

/// Mean of the per-rank rates (normalized discrete area).
double auc_cmc(const CmcCurve& curve);

/// Full protocol for one method: per trial split identities, fit any
/// preprocessing on the training half, train (tdl only), rank the probe
/// camera against the gallery camera, and aggregate. Identities lacking a
/// video in both cameras are excluded up front. Seeded and deterministic;
/// all methods run under the same protocol seed consume identical splits.
BenchmarkReport run_benchmark(const FeatureStore& store, Method method,
                              const ProtocolConfig& protocol, const TrainConfig& train_cfg);

}  // namespace tdl
