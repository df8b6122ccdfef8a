#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tdl/metric.hpp"

namespace tdl {

/// Training hyperparameters. Defaults follow the reference setting:
/// alpha 0.1, rho 1, lambda starting at 1e-3 and adapted by 1.01 / 0.5.
struct TrainConfig {
  double alpha = 0.1;          // weight of the top-push hinge term, in [0,1]
  double rho = 1.0;            // margin
  double lambda0 = 1e-3;       // initial step size (0 allowed: degenerate no-step run)
  double lambda_up = 1.01;     // step growth on accepted iterations
  double lambda_down = 0.5;    // step shrink on rejected iterations
  int max_iters = 300;         // bound on attempted gradient steps
  double rel_tol = 1e-6;       // relative loss-change convergence threshold
  double lambda_floor = 1e-12; // terminate once lambda falls below this
  std::uint64_t rng_seed = 0;
  // Fraction of anchors whose hinge contributions enter each gradient step.
  // 1.0 (default) is the full-batch subgradient; < 1 samples anchors per
  // attempt, seeded by rng_seed. The pull term always stays full.
  double anchor_fraction = 1.0;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Index triple: same-class (anchor, positive), wrong-class negative.
struct Triplet {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;

  bool operator==(const Triplet&) const = default;
};

/// Nearest wrong-class sample of one anchor under the metric the set was
/// built with. `has` is false for samples that are no anchor (no same-class
/// partner).
struct AnchorMin {
  bool has = false;
  std::size_t negative = 0;
  double distance = 0.0;
};

/// Triplets with strictly positive hinge argument at the current metric,
/// plus the per-anchor nearest-negative records they were derived from.
struct TriggeredSet {
  std::vector<Triplet> triplets;
  std::vector<AnchorMin> anchor_min;  // indexed by sample index
};

struct TrainReport {
  MetricMatrix final_metric;
  // loss_trace[0] is the initial objective; one entry per accepted step
  // follows, strictly decreasing.
  std::vector<double> loss_trace;
  // Step size used by each accepted step, aligned with loss_trace[1..].
  std::vector<double> lambda_trace;
  int iters_run = 0;        // attempted gradient steps, accepted or rejected
  // True when training stopped because the relative loss change fell below
  // rel_tol or lambda underflowed; false when max_iters ran out.
  bool converged = false;
  double seconds = 0.0;     // wall time of the run
};

/// Index and squared distance of the nearest differently-labeled sample to
/// samples[anchor]. Ties break toward the smallest index. Throws
/// ProtocolError when every sample shares the anchor's label.
std::pair<std::size_t, double> min_interclass_distance(
    const MetricMatrix& m, const std::vector<LabeledSample>& samples, std::size_t anchor);

/// f(M) = (1-alpha) * sum over ordered same-class pairs (i,j), i != j, of
/// D(x_i,x_j) + alpha * sum over the same pairs of
/// max{D(x_i,x_j) - min_{y_k != y_i} D(x_i,x_k) + rho, 0}.
double objective(const MetricMatrix& m, const std::vector<LabeledSample>& samples,
                 const TrainConfig& cfg);

/// All (i, j, k*) whose hinge argument is strictly positive under `m`,
/// where k* is the anchor's nearest wrong-class sample. Triplets are ordered
/// by (anchor, positive).
TriggeredSet triggered_set(const MetricMatrix& m, const std::vector<LabeledSample>& samples,
                           double rho);

/// Sum of X_ij over ordered same-class pairs; the constant pull-term factor
/// of the gradient, computed once per training run.
Eigen::MatrixXd positive_pair_outer_sum(const std::vector<LabeledSample>& samples);

/// G = (1-alpha) * pull_sum + alpha * sum over triggered (i,j,k) of
/// (X_ij - X_ik); symmetric.
Eigen::MatrixXd gradient(const std::vector<LabeledSample>& samples, const TrainConfig& cfg,
                         const TriggeredSet& trig, const Eigen::MatrixXd& pull_sum);
Eigen::MatrixXd gradient(const std::vector<LabeledSample>& samples, const TrainConfig& cfg,
                         const TriggeredSet& trig);

/// Frobenius-nearest PSD matrix: symmetrize, eigendecompose, zero the
/// negative eigenvalues, reconstruct.
MetricMatrix psd_project(const Eigen::MatrixXd& m_in);

/// Subgradient descent with PSD projection and multiplicative step
/// adaptation. A step whose objective does not decrease is rejected and
/// retried from the previous iterate with the reduced step size, so the
/// accepted-loss trace is strictly decreasing.
TrainReport train(const std::vector<LabeledSample>& samples, const TrainConfig& cfg);

/// L (out_dim x d) with rows sqrt(eigenvalue)-scaled eigenvectors of M in
/// descending eigenvalue order; L^T L reconstructs M when out_dim covers
/// its rank. Used to embed samples for visualization export.
Eigen::MatrixXd decompose_projection(const MetricMatrix& m, Eigen::Index out_dim);

}  // namespace tdl
