#pragma once

// Shared test helpers: seeded generators and independent brute-force
// reference implementations. The oracles deliberately avoid the library's
// internal computation paths (no Gram-expansion shortcuts, no shared
// helpers) so they can catch errors in them.

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "tdl/metric.hpp"
#include "tdl/optimizer.hpp"

namespace testsupport {

inline Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = normal(rng);
  }
  return 0.5 * (a + a.transpose());
}

inline Eigen::MatrixXd random_psd(std::mt19937_64& rng, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = normal(rng);
  }
  return a * a.transpose();
}

inline std::vector<tdl::LabeledSample> random_samples(std::mt19937_64& rng, int num_classes,
                                                      int per_class, Eigen::Index d,
                                                      double spread = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<tdl::LabeledSample> samples;
  for (int c = 0; c < num_classes; ++c) {
    Eigen::VectorXd center(d);
    for (Eigen::Index i = 0; i < d; ++i) center(i) = 2.0 * normal(rng);
    for (int s = 0; s < per_class; ++s) {
      Eigen::VectorXd v = center;
      for (Eigen::Index i = 0; i < d; ++i) v(i) += spread * normal(rng);
      samples.push_back({v, "p" + std::to_string(c), s % 2 == 0 ? "cam_a" : "cam_b"});
    }
  }
  return samples;
}

// ---- independent oracles ----

inline double oracle_distance(const Eigen::MatrixXd& m, const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b) {
  double acc = 0.0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      acc += (a(r) - b(r)) * m(r, c) * (a(c) - b(c));
    }
  }
  return acc;
}

// Exhaustive objective: loops over every ordered same-class pair and scans
// every wrong-class sample for the minimum.
inline double oracle_objective(const Eigen::MatrixXd& m,
                               const std::vector<tdl::LabeledSample>& samples, double alpha,
                               double rho) {
  double pull = 0.0, hinge = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double min_neg = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < samples.size(); ++k) {
      if (samples[k].person_id == samples[i].person_id) continue;
      min_neg = std::min(min_neg, oracle_distance(m, samples[i].feature, samples[k].feature));
    }
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (i == j || samples[j].person_id != samples[i].person_id) continue;
      const double dij = oracle_distance(m, samples[i].feature, samples[j].feature);
      pull += dij;
      hinge += std::max(dij - min_neg + rho, 0.0);
    }
  }
  return (1.0 - alpha) * pull + alpha * hinge;
}

// Exhaustive triggered-set enumeration.
inline std::vector<tdl::Triplet> oracle_triggered(const Eigen::MatrixXd& m,
                                                  const std::vector<tdl::LabeledSample>& samples,
                                                  double rho) {
  std::vector<tdl::Triplet> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::size_t kmin = 0;
    double min_neg = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      if (samples[k].person_id == samples[i].person_id) continue;
      const double dk = oracle_distance(m, samples[i].feature, samples[k].feature);
      if (!found || dk < min_neg) {
        found = true;
        min_neg = dk;
        kmin = k;
      }
    }
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (i == j || samples[j].person_id != samples[i].person_id) continue;
      const double dij = oracle_distance(m, samples[i].feature, samples[j].feature);
      if (dij - min_neg + rho > 0.0) out.push_back({i, j, kmin});
    }
  }
  return out;
}

}  // namespace testsupport
