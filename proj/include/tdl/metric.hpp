#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace tdl {

/// One descriptor vector; dimension is uniform across a dataset.
using FeatureVector = Eigen::VectorXd;

/// A feature vector tagged with the person it shows and the camera that
/// recorded it.
struct LabeledSample {
  FeatureVector feature;
  std::string person_id;
  std::string camera_id;
};

/// Symmetric positive semidefinite matrix parameterizing a Mahalanobis
/// distance. Construction symmetrizes the input as (A + A^T)/2 so gradient
/// drift cannot accumulate; positive semidefiniteness is the producer's
/// contract (psd_project, identity) and is checked by tests, not per call.
class MetricMatrix {
 public:
  /// Throws InvalidInputError if `m` is empty or not square,
  /// NumericalError if any entry is non-finite.
  explicit MetricMatrix(Eigen::MatrixXd m);

  static MetricMatrix identity(Eigen::Index dim);

  Eigen::Index dim() const { return mat_.rows(); }
  const Eigen::MatrixXd& mat() const { return mat_; }

 private:
  Eigen::MatrixXd mat_;
};

/// (x_i - x_j)(x_i - x_j)^T; symmetric, PSD, rank <= 1.
Eigen::MatrixXd pairwise_diff_outer(const FeatureVector& xi, const FeatureVector& xj);

/// Squared Mahalanobis distance (x_i - x_j)^T M (x_i - x_j), clamped to 0
/// if floating-point noise makes it slightly negative.
double mahalanobis_distance(const MetricMatrix& m, const FeatureVector& xi,
                            const FeatureVector& xj);

/// tr(M X_ij); equals the quadratic form when X_ij is an outer product of a
/// pairwise difference.
double trace_form_distance(const Eigen::MatrixXd& m, const Eigen::MatrixXd& xij);

/// Binary metric file: magic "TDLM", u32 version, u32 dim, then row-major
/// little-endian f64 entries. Byte layout is documented in docs/formats.md.
void save_metric(const MetricMatrix& m, const std::filesystem::path& path);
MetricMatrix load_metric(const std::filesystem::path& path);

/// Lossy CSV export for inspection (one row per matrix row, "%.17g" cells).
void export_metric_csv(const MetricMatrix& m, const std::filesystem::path& path);

}  // namespace tdl
