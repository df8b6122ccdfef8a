#include "tdl/metric.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>

#include "tdl/errors.hpp"
#include "tdl/io_util.hpp"

namespace tdl {

MetricMatrix::MetricMatrix(Eigen::MatrixXd m) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw InvalidInputError("metric matrix must be square and nonempty, got " +
                            std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!m.allFinite()) {
    throw NumericalError("metric matrix contains non-finite entries");
  }
  mat_ = 0.5 * (m + m.transpose());
}

MetricMatrix MetricMatrix::identity(Eigen::Index dim) {
  return MetricMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

Eigen::MatrixXd pairwise_diff_outer(const FeatureVector& xi, const FeatureVector& xj) {
  if (xi.size() != xj.size()) {
    throw InvalidInputError("pairwise_diff_outer: dimension mismatch " +
                            std::to_string(xi.size()) + " vs " + std::to_string(xj.size()));
  }
  const Eigen::VectorXd diff = xi - xj;
  return diff * diff.transpose();
}

double mahalanobis_distance(const MetricMatrix& m, const FeatureVector& xi,
                            const FeatureVector& xj) {
  if (xi.size() != xj.size() || xi.size() != m.dim()) {
    throw InvalidInputError("mahalanobis_distance: dimension mismatch");
  }
  const Eigen::VectorXd diff = xi - xj;
  const double v = diff.dot(m.mat() * diff);
  return v < 0.0 ? 0.0 : v;
}

double trace_form_distance(const Eigen::MatrixXd& m, const Eigen::MatrixXd& xij) {
  if (m.rows() != m.cols() || xij.rows() != xij.cols() || m.rows() != xij.rows()) {
    throw InvalidInputError("trace_form_distance: matrices must be square and conformable");
  }
  // tr(M X) = sum_{a,b} M(a,b) X(b,a)
  return m.cwiseProduct(xij.transpose()).sum();
}

namespace {
constexpr char kMetricMagic[4] = {'T', 'D', 'L', 'M'};
constexpr std::uint32_t kMetricVersion = 1;
}  // namespace

void save_metric(const MetricMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open metric file for writing: " + path.string());
  out.write(kMetricMagic, 4);
  io::write_u32(out, kMetricVersion);
  io::write_u32(out, static_cast<std::uint32_t>(m.dim()));
  const Eigen::MatrixXd& mat = m.mat();
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      io::write_f64(out, mat(r, c));
    }
  }
  if (!out) throw IoError("failed writing metric file: " + path.string());
}

MetricMatrix load_metric(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open metric file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMetricMagic, 4) != 0) {
    throw IoError("not a TDLM metric file: " + path.string());
  }
  const std::uint32_t version = io::read_u32(in, path);
  if (version != kMetricVersion) {
    throw IoError("unsupported TDLM version " + std::to_string(version) + ": " + path.string());
  }
  const std::uint32_t dim = io::read_u32(in, path);
  if (dim == 0) throw IoError("TDLM file has zero dimension: " + path.string());
  Eigen::MatrixXd mat(dim, dim);
  for (std::uint32_t r = 0; r < dim; ++r) {
    for (std::uint32_t c = 0; c < dim; ++c) {
      mat(r, c) = io::read_f64(in, path);
    }
  }
  if (!mat.allFinite()) {
    throw IoError("TDLM file contains non-finite entries: " + path.string());
  }
  return MetricMatrix(std::move(mat));
}

void export_metric_csv(const MetricMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open csv file for writing: " + path.string());
  const Eigen::MatrixXd& mat = m.mat();
  char buf[64];
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", mat(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing csv file: " + path.string());
}

}  // namespace tdl
