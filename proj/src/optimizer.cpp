#include "tdl/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <unordered_map>

#include "tdl/errors.hpp"

namespace tdl {

void TrainConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0,1]");
  if (!(rho > 0.0)) throw ConfigError("rho must be positive");
  if (!(lambda0 >= 0.0)) throw ConfigError("lambda0 must be nonnegative");
  if (!(lambda_up > 1.0)) throw ConfigError("lambda_up must be > 1");
  if (!(lambda_down > 0.0 && lambda_down < 1.0)) throw ConfigError("lambda_down must be in (0,1)");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(rel_tol >= 0.0)) throw ConfigError("rel_tol must be nonnegative");
  if (!(lambda_floor > 0.0)) throw ConfigError("lambda_floor must be positive");
  if (!(anchor_fraction > 0.0 && anchor_fraction <= 1.0)) {
    throw ConfigError("anchor_fraction must be in (0,1]");
  }
}

namespace {

struct Problem {
  Eigen::MatrixXd features;  // n x d, one sample per row
  std::vector<int> labels;   // dense class ids in first-appearance order
  std::vector<std::pair<std::size_t, std::size_t>> pos_pairs;  // ordered (i,j), i != j
  std::vector<std::size_t> anchors;  // samples with at least one positive
  int num_classes = 0;
};

Problem build_problem(const std::vector<LabeledSample>& samples) {
  if (samples.empty()) throw ProtocolError("empty sample set");
  const Eigen::Index d = samples.front().feature.size();
  if (d == 0) throw InvalidInputError("samples have zero dimension");

  Problem p;
  p.features.resize(static_cast<Eigen::Index>(samples.size()), d);
  p.labels.resize(samples.size());
  std::unordered_map<std::string, int> class_of;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const LabeledSample& s = samples[i];
    if (s.person_id.empty()) throw InvalidInputError("sample has empty person_id");
    if (s.feature.size() != d) {
      throw InvalidInputError("inconsistent feature dimension: sample " + std::to_string(i) +
                              " has " + std::to_string(s.feature.size()) + ", expected " +
                              std::to_string(d));
    }
    if (!s.feature.allFinite()) {
      throw InvalidInputError("sample " + std::to_string(i) + " has non-finite features");
    }
    p.features.row(static_cast<Eigen::Index>(i)) = s.feature.transpose();
    auto [it, inserted] = class_of.try_emplace(s.person_id, p.num_classes);
    if (inserted) ++p.num_classes;
    p.labels[i] = it->second;
  }

  std::vector<std::size_t> anchor_mark(samples.size(), 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (i != j && p.labels[i] == p.labels[j]) {
        p.pos_pairs.emplace_back(i, j);
        anchor_mark[i] = 1;
      }
    }
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (anchor_mark[i]) p.anchors.push_back(i);
  }
  return p;
}

void require_trainable(const Problem& p) {
  if (p.num_classes < 2) {
    throw ProtocolError("need at least 2 identities, got " + std::to_string(p.num_classes));
  }
  if (p.pos_pairs.empty()) {
    throw ProtocolError("no positive pair: every identity has a single sample");
  }
}

void require_dim(const Problem& p, const MetricMatrix& m) {
  if (m.dim() != p.features.cols()) {
    throw InvalidInputError("metric dimension " + std::to_string(m.dim()) +
                            " does not match feature dimension " +
                            std::to_string(p.features.cols()));
  }
}

// All pairwise squared distances under M via the Gram expansion
// D(i,k) = q_i + q_k - 2 (F M F^T)(i,k).
Eigen::MatrixXd squared_distance_matrix(const Eigen::MatrixXd& features,
                                        const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd w = features * m;
  const Eigen::MatrixXd gram = w * features.transpose();
  const Eigen::VectorXd q = gram.diagonal();
  Eigen::MatrixXd dist = -2.0 * gram;
  dist.colwise() += q;
  dist.rowwise() += q.transpose();
  return dist;
}

// Nearest wrong-class sample per anchor; ties keep the smallest index.
std::vector<AnchorMin> anchor_minimums(const Problem& p, const Eigen::MatrixXd& dist) {
  std::vector<AnchorMin> mins(p.labels.size());
  for (std::size_t i : p.anchors) {
    AnchorMin best;
    for (std::size_t k = 0; k < p.labels.size(); ++k) {
      if (p.labels[k] == p.labels[i]) continue;
      const double dk = dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      if (!best.has || dk < best.distance) {
        best = {true, k, dk};
      }
    }
    if (!best.has) {
      throw ProtocolError("anchor " + std::to_string(i) + " has no differently-labeled sample");
    }
    mins[i] = best;
  }
  return mins;
}

struct Evaluation {
  double loss = 0.0;
  Eigen::MatrixXd dist;
  std::vector<AnchorMin> anchor_min;
};

Evaluation evaluate(const Problem& p, const Eigen::MatrixXd& m, double alpha, double rho) {
  Evaluation ev;
  ev.dist = squared_distance_matrix(p.features, m);
  ev.anchor_min = anchor_minimums(p, ev.dist);
  double pull = 0.0;
  double hinge = 0.0;
  for (const auto& [i, j] : p.pos_pairs) {
    const double dij = ev.dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    pull += dij;
    const double arg = dij - ev.anchor_min[i].distance + rho;
    if (arg > 0.0) hinge += arg;
  }
  const double f = (1.0 - alpha) * pull + alpha * hinge;
  ev.loss = f < 0.0 ? 0.0 : f;
  return ev;
}

TriggeredSet triggered_from_eval(const Problem& p, const Evaluation& ev, double rho) {
  TriggeredSet trig;
  trig.anchor_min = ev.anchor_min;
  for (const auto& [i, j] : p.pos_pairs) {
    const double dij = ev.dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    if (dij - ev.anchor_min[i].distance + rho > 0.0) {
      trig.triplets.push_back({i, j, ev.anchor_min[i].negative});
    }
  }
  return trig;
}

// Hinge part of the gradient over an optional anchor subset, assembled as
// A A^T - B B^T from the stacked difference vectors.
Eigen::MatrixXd hinge_gradient(const Eigen::MatrixXd& features,
                               const std::vector<Triplet>& triplets,
                               const std::vector<char>* anchor_used) {
  const Eigen::Index d = features.cols();
  std::vector<const Triplet*> active;
  active.reserve(triplets.size());
  for (const Triplet& t : triplets) {
    if (anchor_used == nullptr || (*anchor_used)[t.anchor]) active.push_back(&t);
  }
  if (active.empty()) return Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd a(d, static_cast<Eigen::Index>(active.size()));
  Eigen::MatrixXd b(d, static_cast<Eigen::Index>(active.size()));
  for (std::size_t c = 0; c < active.size(); ++c) {
    const Triplet& t = *active[c];
    const auto col = static_cast<Eigen::Index>(c);
    a.col(col) = (features.row(static_cast<Eigen::Index>(t.anchor)) -
                  features.row(static_cast<Eigen::Index>(t.positive)))
                     .transpose();
    b.col(col) = (features.row(static_cast<Eigen::Index>(t.anchor)) -
                  features.row(static_cast<Eigen::Index>(t.negative)))
                     .transpose();
  }
  return a * a.transpose() - b * b.transpose();
}

Eigen::MatrixXd symmetrized(Eigen::MatrixXd g) {
  g = 0.5 * (g + g.transpose()).eval();
  return g;
}

}  // namespace

std::pair<std::size_t, double> min_interclass_distance(const MetricMatrix& m,
                                                       const std::vector<LabeledSample>& samples,
                                                       std::size_t anchor) {
  if (anchor >= samples.size()) throw InvalidInputError("anchor index out of range");
  const Problem p = build_problem(samples);
  require_dim(p, m);
  if (p.num_classes < 2) {
    throw ProtocolError("all samples share one label; top-push is undefined");
  }
  const Eigen::VectorXd xi = p.features.row(static_cast<Eigen::Index>(anchor)).transpose();
  bool found = false;
  std::size_t best_k = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (p.labels[k] == p.labels[anchor]) continue;
    const Eigen::VectorXd diff = xi - p.features.row(static_cast<Eigen::Index>(k)).transpose();
    const double dk = diff.dot(m.mat() * diff);
    if (!found || dk < best_d) {
      found = true;
      best_k = k;
      best_d = dk;
    }
  }
  return {best_k, best_d};
}

double objective(const MetricMatrix& m, const std::vector<LabeledSample>& samples,
                 const TrainConfig& cfg) {
  cfg.validate();
  const Problem p = build_problem(samples);
  require_trainable(p);
  require_dim(p, m);
  return evaluate(p, m.mat(), cfg.alpha, cfg.rho).loss;
}

TriggeredSet triggered_set(const MetricMatrix& m, const std::vector<LabeledSample>& samples,
                           double rho) {
  if (!std::isfinite(rho)) throw InvalidInputError("rho must be finite");
  const Problem p = build_problem(samples);
  require_trainable(p);
  require_dim(p, m);
  const Evaluation ev = evaluate(p, m.mat(), 1.0, rho);
  return triggered_from_eval(p, ev, rho);
}

Eigen::MatrixXd positive_pair_outer_sum(const std::vector<LabeledSample>& samples) {
  const Problem p = build_problem(samples);
  const Eigen::Index d = p.features.cols();
  // Ordered pairs (i,j) and (j,i) share the same outer product, so stack
  // each unordered pair once and double the Gram product.
  std::vector<std::pair<std::size_t, std::size_t>> unordered;
  for (const auto& [i, j] : p.pos_pairs) {
    if (i < j) unordered.emplace_back(i, j);
  }
  if (unordered.empty()) return Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd u(d, static_cast<Eigen::Index>(unordered.size()));
  for (std::size_t c = 0; c < unordered.size(); ++c) {
    const auto& [i, j] = unordered[c];
    u.col(static_cast<Eigen::Index>(c)) = (p.features.row(static_cast<Eigen::Index>(i)) -
                                           p.features.row(static_cast<Eigen::Index>(j)))
                                              .transpose();
  }
  return symmetrized(2.0 * (u * u.transpose()));
}

Eigen::MatrixXd gradient(const std::vector<LabeledSample>& samples, const TrainConfig& cfg,
                         const TriggeredSet& trig, const Eigen::MatrixXd& pull_sum) {
  cfg.validate();
  const Problem p = build_problem(samples);
  const Eigen::Index d = p.features.cols();
  if (pull_sum.rows() != d || pull_sum.cols() != d) {
    throw InvalidInputError("pull_sum dimension does not match features");
  }
  for (const Triplet& t : trig.triplets) {
    if (t.anchor >= samples.size() || t.positive >= samples.size() ||
        t.negative >= samples.size()) {
      throw InvalidInputError("triggered set references an out-of-range sample index");
    }
  }
  Eigen::MatrixXd g = (1.0 - cfg.alpha) * pull_sum;
  if (cfg.alpha > 0.0 && !trig.triplets.empty()) {
    g += cfg.alpha * hinge_gradient(p.features, trig.triplets, nullptr);
  }
  return symmetrized(std::move(g));
}

Eigen::MatrixXd gradient(const std::vector<LabeledSample>& samples, const TrainConfig& cfg,
                         const TriggeredSet& trig) {
  return gradient(samples, cfg, trig, positive_pair_outer_sum(samples));
}

MetricMatrix psd_project(const Eigen::MatrixXd& m_in) {
  if (m_in.rows() == 0 || m_in.rows() != m_in.cols()) {
    throw InvalidInputError("psd_project: matrix must be square and nonempty");
  }
  if (!m_in.allFinite()) throw NumericalError("psd_project: non-finite input");
  const Eigen::MatrixXd sym = 0.5 * (m_in + m_in.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) {
    throw NumericalError("psd_project: eigendecomposition failed");
  }
  const Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
  return MetricMatrix(es.eigenvectors() * clamped.asDiagonal() *
                      es.eigenvectors().transpose());
}

TrainReport train(const std::vector<LabeledSample>& samples, const TrainConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  const Problem p = build_problem(samples);
  require_trainable(p);
  const Eigen::Index d = p.features.cols();

  const Eigen::MatrixXd pull_sum = positive_pair_outer_sum(samples);
  const bool subsample = cfg.anchor_fraction < 1.0;
  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<char> anchor_used(samples.size(), 1);

  // Draws a fresh anchor subset; only their hinge contributions enter G.
  auto resample_anchors = [&] {
    std::fill(anchor_used.begin(), anchor_used.end(), 0);
    std::vector<std::size_t> pool = p.anchors;
    const auto want = static_cast<std::size_t>(
        std::max<double>(1.0, std::ceil(cfg.anchor_fraction * static_cast<double>(pool.size()))));
    for (std::size_t picked = 0; picked < want && picked < pool.size(); ++picked) {
      std::uniform_int_distribution<std::size_t> pick(picked, pool.size() - 1);
      std::swap(pool[picked], pool[pick(rng)]);
      anchor_used[pool[picked]] = 1;
    }
  };

  auto gradient_at = [&](const Evaluation& ev) -> Eigen::MatrixXd {
    Eigen::MatrixXd g = (1.0 - cfg.alpha) * pull_sum;
    if (cfg.alpha > 0.0) {
      const TriggeredSet trig = triggered_from_eval(p, ev, cfg.rho);
      if (!trig.triplets.empty()) {
        if (subsample) resample_anchors();
        g += cfg.alpha *
             hinge_gradient(p.features, trig.triplets, subsample ? &anchor_used : nullptr);
      }
    }
    return symmetrized(std::move(g));
  };

  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
  Evaluation cur = evaluate(p, m, cfg.alpha, cfg.rho);

  TrainReport report{MetricMatrix::identity(d), {cur.loss}, {}, 0, false};
  Eigen::MatrixXd g = gradient_at(cur);
  double lambda = cfg.lambda0;

  while (report.iters_run < cfg.max_iters) {
    if (lambda < cfg.lambda_floor) {
      report.converged = true;
      break;
    }
    ++report.iters_run;
    const MetricMatrix candidate = psd_project(m - lambda * g);
    const Evaluation next = evaluate(p, candidate.mat(), cfg.alpha, cfg.rho);
    if (next.loss < cur.loss) {
      const double rel = (cur.loss - next.loss) / std::max(cur.loss, 1e-12);
      m = candidate.mat();
      cur = std::move(next);
      report.loss_trace.push_back(cur.loss);
      report.lambda_trace.push_back(lambda);
      lambda *= cfg.lambda_up;
      if (rel < cfg.rel_tol) {
        report.converged = true;
        break;
      }
      g = gradient_at(cur);
    } else {
      lambda *= cfg.lambda_down;
      if (subsample) g = gradient_at(cur);
    }
  }

  report.final_metric = MetricMatrix(std::move(m));
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Eigen::MatrixXd decompose_projection(const MetricMatrix& m, Eigen::Index out_dim) {
  const Eigen::Index d = m.dim();
  if (out_dim < 1 || out_dim > d) {
    throw InvalidInputError("decompose_projection: out_dim must be in [1, " + std::to_string(d) +
                            "], got " + std::to_string(out_dim));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat());
  if (es.info() != Eigen::Success) {
    throw NumericalError("decompose_projection: eigendecomposition failed");
  }
  Eigen::MatrixXd projection(out_dim, d);
  for (Eigen::Index r = 0; r < out_dim; ++r) {
    const Eigen::Index src = d - 1 - r;  // eigenvalues come back ascending
    const double ev = std::max(es.eigenvalues()(src), 0.0);
    projection.row(r) = std::sqrt(ev) * es.eigenvectors().col(src).transpose();
  }
  return projection;
}

}  // namespace tdl
