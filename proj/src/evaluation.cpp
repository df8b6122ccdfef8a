#include "tdl/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <numeric>
#include <random>

#include "tdl/errors.hpp"

namespace tdl {

Method parse_method(const std::string& name) {
  if (name == "tdl") return Method::Tdl;
  if (name == "euclidean") return Method::Euclidean;
  if (name == "l1norm") return Method::L1Norm;
  throw ConfigError("unknown method '" + name + "' (expected tdl, euclidean, or l1norm)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Tdl: return "tdl";
    case Method::Euclidean: return "euclidean";
    case Method::L1Norm: return "l1norm";
  }
  return "?";
}

std::vector<TrialSplit> make_splits(const std::vector<std::string>& identities, int num_trials,
                                    std::uint64_t seed) {
  if (num_trials < 1) throw InvalidInputError("make_splits: num_trials must be >= 1");
  std::vector<std::string> ids = identities;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 2) {
    throw ProtocolError("make_splits: need at least 2 identities, got " +
                        std::to_string(ids.size()));
  }

  std::vector<TrialSplit> splits;
  splits.reserve(static_cast<std::size_t>(num_trials));
  const std::size_t train_count = ids.size() / 2;  // remainder goes to test
  for (int trial = 0; trial < num_trials; ++trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial)};
    std::mt19937_64 rng(seq);
    std::vector<std::string> shuffled = ids;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    TrialSplit split;
    split.seed = seed;
    split.train_ids.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(train_count));
    split.test_ids.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(train_count), shuffled.end());
    std::sort(split.train_ids.begin(), split.train_ids.end());
    std::sort(split.test_ids.begin(), split.test_ids.end());
    splits.push_back(std::move(split));
  }
  return splits;
}

namespace {

std::vector<std::size_t> rank_by_distance(const std::vector<double>& dist) {
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;  // deterministic tie-break
  });
  return order;
}

void check_probe_vs_gallery(const LabeledSample& probe,
                            const std::vector<LabeledSample>& gallery) {
  if (gallery.empty()) throw InvalidInputError("rank_gallery: empty gallery");
  for (const LabeledSample& g : gallery) {
    if (g.camera_id == probe.camera_id) {
      throw ProtocolError("probe and gallery share camera '" + probe.camera_id + "'");
    }
    if (g.feature.size() != probe.feature.size()) {
      throw InvalidInputError("rank_gallery: dimension mismatch");
    }
  }
}

using Ranker = std::function<std::vector<std::size_t>(const LabeledSample&,
                                                      const std::vector<LabeledSample>&)>;

CmcCurve cmc_impl(const Ranker& rank, const std::vector<LabeledSample>& probes,
                  const std::vector<LabeledSample>& gallery) {
  if (probes.empty()) throw InvalidInputError("cmc: no probes");
  if (gallery.empty()) throw InvalidInputError("cmc: empty gallery");

  std::map<std::string, std::size_t> gallery_of;
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    auto [it, inserted] = gallery_of.try_emplace(gallery[g].person_id, g);
    if (!inserted) {
      throw ProtocolError("identity '" + gallery[g].person_id +
                          "' appears more than once in the gallery (single-shot violated)");
    }
  }

  std::vector<std::size_t> hits_at(gallery.size(), 0);
  for (const LabeledSample& probe : probes) {
    const auto it = gallery_of.find(probe.person_id);
    if (it == gallery_of.end()) {
      throw ProtocolError("probe identity '" + probe.person_id + "' is absent from the gallery");
    }
    const std::vector<std::size_t> order = rank(probe, gallery);
    const auto pos = std::find(order.begin(), order.end(), it->second);
    ++hits_at[static_cast<std::size_t>(pos - order.begin())];
  }

  CmcCurve curve;
  curve.rates.resize(gallery.size());
  std::size_t cum = 0;
  for (std::size_t k = 0; k < gallery.size(); ++k) {
    cum += hits_at[k];
    curve.rates[k] = static_cast<double>(cum) / static_cast<double>(probes.size());
  }
  return curve;
}

}  // namespace

std::vector<std::size_t> rank_gallery(const MetricMatrix& m, const LabeledSample& probe,
                                      const std::vector<LabeledSample>& gallery) {
  check_probe_vs_gallery(probe, gallery);
  if (probe.feature.size() != m.dim()) {
    throw InvalidInputError("rank_gallery: metric dimension mismatch");
  }
  std::vector<double> dist(gallery.size());
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    dist[g] = mahalanobis_distance(m, probe.feature, gallery[g].feature);
  }
  return rank_by_distance(dist);
}

std::vector<std::size_t> l1_rank_gallery(const LabeledSample& probe,
                                         const std::vector<LabeledSample>& gallery) {
  check_probe_vs_gallery(probe, gallery);
  std::vector<double> dist(gallery.size());
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    dist[g] = (probe.feature - gallery[g].feature).cwiseAbs().sum();
  }
  return rank_by_distance(dist);
}

CmcCurve cmc(const MetricMatrix& m, const std::vector<LabeledSample>& probes,
             const std::vector<LabeledSample>& gallery) {
  return cmc_impl(
      [&m](const LabeledSample& p, const std::vector<LabeledSample>& g) {
        return rank_gallery(m, p, g);
      },
      probes, gallery);
}

CmcCurve cmc_l1(const std::vector<LabeledSample>& probes,
                const std::vector<LabeledSample>& gallery) {
  return cmc_impl(l1_rank_gallery, probes, gallery);
}

double auc_cmc(const CmcCurve& curve) {
  if (curve.rates.empty()) throw InvalidInputError("auc_cmc: empty curve");
  return std::accumulate(curve.rates.begin(), curve.rates.end(), 0.0) /
         static_cast<double>(curve.rates.size());
}

BenchmarkReport run_benchmark(const FeatureStore& store, Method method,
                              const ProtocolConfig& protocol, const TrainConfig& train_cfg) {
  if (protocol.num_trials < 1) throw ConfigError("protocol num_trials must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  const std::vector<std::string> cameras = store.cameras();
  if (cameras.size() != 2) {
    throw ProtocolError("single-shot benchmark needs exactly 2 cameras, store has " +
                        std::to_string(cameras.size()));
  }
  const std::string& probe_cam =
      protocol.direction == Direction::Forward ? cameras[0] : cameras[1];
  const std::string& gallery_cam =
      protocol.direction == Direction::Forward ? cameras[1] : cameras[0];

  // Keep identities that have a video in both cameras.
  std::map<std::string, int> camera_mask;
  for (const LabeledSample& r : store.records) {
    camera_mask[r.person_id] |= r.camera_id == cameras[0] ? 1 : 2;
  }
  std::vector<std::string> eligible;
  for (const auto& [id, mask] : camera_mask) {
    if (mask == 3) eligible.push_back(id);
  }
  if (eligible.size() < 2) {
    throw ProtocolError("benchmark needs at least 2 identities present in both cameras, got " +
                        std::to_string(eligible.size()));
  }

  const std::vector<TrialSplit> splits = make_splits(eligible, protocol.num_trials, protocol.seed);

  BenchmarkReport report;
  report.method = method_name(method);
  report.num_identities_used = static_cast<int>(eligible.size());
  report.probe_camera = probe_cam;
  report.gallery_camera = gallery_cam;

  for (std::size_t trial = 0; trial < splits.size(); ++trial) {
    const TrialSplit& split = splits[trial];
    auto in_ids = [](const std::vector<std::string>& ids, const std::string& id) {
      return std::binary_search(ids.begin(), ids.end(), id);
    };
    std::vector<LabeledSample> train_samples, test_samples;
    for (const LabeledSample& r : store.records) {
      if (camera_mask[r.person_id] != 3) continue;
      if (in_ids(split.train_ids, r.person_id)) train_samples.push_back(r);
      else if (in_ids(split.test_ids, r.person_id)) test_samples.push_back(r);
    }

    const PreprocessParams params = fit_preprocess(protocol.preprocess, train_samples);
    train_samples = apply_preprocess(train_samples, params);
    test_samples = apply_preprocess(test_samples, params);

    std::vector<LabeledSample> probes, gallery;
    for (const LabeledSample& r : test_samples) {
      if (r.camera_id == probe_cam) probes.push_back(r);
      else gallery.push_back(r);
    }

    double train_seconds = 0.0;
    CmcCurve curve;
    if (method == Method::L1Norm) {
      curve = cmc_l1(probes, gallery);
    } else {
      MetricMatrix metric = MetricMatrix::identity(store.dim);
      if (method == Method::Tdl) {
        TrainConfig cfg = train_cfg;
        // decorrelate per-trial anchor subsampling without touching the data
        cfg.rng_seed = train_cfg.rng_seed + 0x9e3779b97f4a7c15ull * (trial + 1);
        const auto t0 = std::chrono::steady_clock::now();
        TrainReport trained = train(train_samples, cfg);
        train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        metric = std::move(trained.final_metric);
      }
      curve = cmc(metric, probes, gallery);
    }
    report.per_trial_auc.push_back(auc_cmc(curve));
    report.per_trial.push_back(std::move(curve));
    report.trial_train_seconds.push_back(train_seconds);
  }

  const std::size_t curve_len = report.per_trial.front().rates.size();
  report.mean_curve.rates.assign(curve_len, 0.0);
  for (const CmcCurve& c : report.per_trial) {
    for (std::size_t k = 0; k < curve_len; ++k) report.mean_curve.rates[k] += c.rates[k];
  }
  for (double& r : report.mean_curve.rates) r /= static_cast<double>(report.per_trial.size());
  report.mean_auc = std::accumulate(report.per_trial_auc.begin(), report.per_trial_auc.end(), 0.0) /
                    static_cast<double>(report.per_trial_auc.size());
  const std::array<std::size_t, 4> table_ranks{1, 5, 10, 20};
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t k = std::min(table_ranks[i], curve_len);
    report.rank_rates[i] = report.mean_curve.rates[k - 1];
  }
  report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace tdl
