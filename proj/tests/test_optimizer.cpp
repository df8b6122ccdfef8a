#include <doctest.h>

#include <cmath>
#include <random>

#include "tdl/errors.hpp"
#include "tdl/optimizer.hpp"
#include "support.hpp"

using namespace tdl;

namespace {

std::vector<LabeledSample> samples_1d(const std::vector<std::pair<double, std::string>>& spec) {
  std::vector<LabeledSample> out;
  int cam = 0;
  for (const auto& [pos, label] : spec) {
    Eigen::VectorXd v(1);
    v << pos;
    out.push_back({v, label, cam++ % 2 == 0 ? "cam_a" : "cam_b"});
  }
  return out;
}

}  // namespace

TEST_CASE("min_interclass_distance picks the nearest wrong-class sample") {
  const MetricMatrix id1 = MetricMatrix::identity(1);
  SUBCASE("enumerated example") {
    const auto samples = samples_1d({{0, "A"}, {1, "A"}, {5, "B"}, {3, "C"}});
    const auto [k, d] = min_interclass_distance(id1, samples, 0);
    CHECK(k == 3);  // the C sample at 3
    CHECK(d == doctest::Approx(9.0));
  }
  SUBCASE("two samples, only candidate") {
    const auto samples = samples_1d({{0, "A"}, {4, "B"}});
    const auto [k, d] = min_interclass_distance(id1, samples, 0);
    CHECK(k == 1);
    CHECK(d == doctest::Approx(16.0));
  }
  SUBCASE("duplicate nearest negatives break toward the smaller index") {
    const auto samples = samples_1d({{0, "A"}, {2, "B"}, {2, "C"}});
    const auto [k, d] = min_interclass_distance(id1, samples, 0);
    CHECK(k == 1);
    CHECK(d == doctest::Approx(4.0));
  }
  SUBCASE("single label is a protocol error") {
    const auto samples = samples_1d({{0, "A"}, {1, "A"}});
    CHECK_THROWS_AS(min_interclass_distance(id1, samples, 0), ProtocolError);
  }
}

TEST_CASE("objective closed-form examples") {
  TrainConfig cfg;
  cfg.rho = 1.0;

  SUBCASE("zero matrix: alpha * (#ordered positive pairs) * rho") {
    const auto samples = samples_1d({{0, "A"}, {1, "A"}, {5, "B"}, {6, "B"}});
    const MetricMatrix zero(Eigen::MatrixXd::Zero(1, 1));
    cfg.alpha = 0.5;
    CHECK(objective(zero, samples, cfg) == doctest::Approx(0.5 * 4 * 1.0));
    cfg.alpha = 0.0;
    CHECK(objective(zero, samples, cfg) == 0.0);
  }
  SUBCASE("alpha zero reduces to summed squared distances over positive pairs") {
    const auto samples = samples_1d({{0, "A"}, {2, "A"}, {9, "B"}, {9.5, "B"}});
    cfg.alpha = 0.0;
    const double expect = 2.0 * 4.0 + 2.0 * 0.25;  // ordered pairs double each
    CHECK(objective(MetricMatrix::identity(1), samples, cfg) == doctest::Approx(expect));
  }
  SUBCASE("hand-enumerated two-term value") {
    const auto samples = samples_1d({{0, "A"}, {1, "A"}, {10, "B"}});
    cfg.alpha = 0.5;
    CHECK(objective(MetricMatrix::identity(1), samples, cfg) == doctest::Approx(1.0));
  }
  SUBCASE("single positive pair required") {
    const auto samples = samples_1d({{0, "A"}, {1, "B"}, {2, "C"}});
    CHECK_THROWS_AS(objective(MetricMatrix::identity(1), samples, cfg), ProtocolError);
  }
  SUBCASE("matches the exhaustive oracle on random data") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
      const auto samples = testsupport::random_samples(rng, 3, 3, 4);
      const Eigen::MatrixXd m = testsupport::random_psd(rng, 4);
      cfg.alpha = 0.3;
      const double got = objective(MetricMatrix(m), samples, cfg);
      const double want = testsupport::oracle_objective(m, samples, 0.3, 1.0);
      CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("triggered_set matches exhaustive enumeration") {
  SUBCASE("well separated data triggers nothing") {
    const auto samples = samples_1d({{0, "A"}, {1, "A"}, {10, "B"}});
    const auto trig = triggered_set(MetricMatrix::identity(1), samples, 1.0);
    CHECK(trig.triplets.empty());
    CHECK(trig.anchor_min[0].has);
    CHECK(trig.anchor_min[0].distance == doctest::Approx(100.0));
    CHECK_FALSE(trig.anchor_min[2].has);  // lone B sample anchors nothing
  }
  SUBCASE("zero matrix triggers every ordered positive pair") {
    const auto samples = samples_1d({{0, "A"}, {1, "A"}, {5, "B"}, {6, "B"}});
    const auto trig = triggered_set(MetricMatrix(Eigen::MatrixXd::Zero(1, 1)), samples, 1.0);
    CHECK(trig.triplets.size() == 4);
  }
  SUBCASE("oracle equivalence on 50 random datasets") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 50; ++rep) {
      const int classes = 2 + rep % 4;
      const int per = 2 + rep % 3;
      const Eigen::Index d = 3 + rep % 5;
      const auto samples = testsupport::random_samples(rng, classes, per, d);
      const Eigen::MatrixXd m = testsupport::random_psd(rng, d, 0.4);
      const auto got = triggered_set(MetricMatrix(m), samples, 1.0).triplets;
      const auto want = testsupport::oracle_triggered(m, samples, 1.0);
      REQUIRE(got.size() == want.size());
      CHECK(got == want);
    }
  }
}

TEST_CASE("gradient") {
  TrainConfig cfg;

  SUBCASE("alpha zero returns the precomputed pull sum unchanged") {
    std::mt19937_64 rng(3);
    const auto samples = testsupport::random_samples(rng, 3, 2, 4);
    cfg.alpha = 0.0;
    const Eigen::MatrixXd pull = positive_pair_outer_sum(samples);
    const auto trig = triggered_set(MetricMatrix::identity(4), samples, cfg.rho);
    const Eigen::MatrixXd g = gradient(samples, cfg, trig, pull);
    CHECK((g.array() == pull.array()).all());
  }

  SUBCASE("empty triggered set leaves only the weighted pull term") {
    const auto samples = samples_1d({{0, "A"}, {1, "A"}, {50, "B"}});
    cfg.alpha = 0.25;
    const Eigen::MatrixXd pull = positive_pair_outer_sum(samples);
    TriggeredSet empty;
    empty.anchor_min.resize(samples.size());
    const Eigen::MatrixXd g = gradient(samples, cfg, empty, pull);
    CHECK(g(0, 0) == doctest::Approx(0.75 * pull(0, 0)));
  }

  SUBCASE("pull sum equals the sum of ordered-pair outer products") {
    std::mt19937_64 rng(9);
    const auto samples = testsupport::random_samples(rng, 3, 3, 5);
    const Eigen::MatrixXd pull = positive_pair_outer_sum(samples);
    Eigen::MatrixXd want = Eigen::MatrixXd::Zero(5, 5);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t j = 0; j < samples.size(); ++j) {
        if (i != j && samples[i].person_id == samples[j].person_id) {
          want += pairwise_diff_outer(samples[i].feature, samples[j].feature);
        }
      }
    }
    CHECK((pull - want).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, want.cwiseAbs().maxCoeff()));
  }
}

namespace {

// Central finite differences of the objective, entry by entry. Returns
// false when the dataset sits too close to a hinge boundary or an argmin
// tie for the subgradient to be well defined.
bool fd_gradient_check(std::uint64_t seed, double* worst_rel) {
  std::mt19937_64 rng(seed);
  const auto samples = testsupport::random_samples(rng, 3, 2, 5);
  const Eigen::MatrixXd m = testsupport::random_psd(rng, 5, 0.5);
  TrainConfig cfg;
  cfg.alpha = 0.4;

  // degeneracy margins: no hinge argument within 1e-3 of zero, no two
  // negative distances within 1e-3 of each other
  const auto trig = triggered_set(MetricMatrix(m), samples, cfg.rho);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!trig.anchor_min[i].has) continue;
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (i == j || samples[i].person_id != samples[j].person_id) continue;
      const double arg = testsupport::oracle_distance(m, samples[i].feature, samples[j].feature) -
                         trig.anchor_min[i].distance + cfg.rho;
      if (std::abs(arg) < 1e-3) return false;
    }
    for (std::size_t k = 0; k < samples.size(); ++k) {
      if (samples[k].person_id == samples[i].person_id || k == trig.anchor_min[i].negative)
        continue;
      const double dk = testsupport::oracle_distance(m, samples[i].feature, samples[k].feature);
      if (std::abs(dk - trig.anchor_min[i].distance) < 1e-3) return false;
    }
  }

  const Eigen::MatrixXd g = gradient(samples, cfg, trig);
  const double h = 1e-6;
  *worst_rel = 0.0;
  for (Eigen::Index a = 0; a < 5; ++a) {
    for (Eigen::Index b = 0; b < 5; ++b) {
      Eigen::MatrixXd up = m, down = m;
      up(a, b) += h;
      down(a, b) -= h;
      const double fu = testsupport::oracle_objective(up, samples, cfg.alpha, cfg.rho);
      const double fd = testsupport::oracle_objective(down, samples, cfg.alpha, cfg.rho);
      const double fdiff = (fu - fd) / (2.0 * h);
      const double rel = std::abs(fdiff - g(a, b)) / std::max(1.0, std::abs(g(a, b)));
      *worst_rel = std::max(*worst_rel, rel);
    }
  }
  return true;
}

}  // namespace

TEST_CASE("gradient matches central finite differences of the objective") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 40 && checked < 20; ++seed) {
    double worst = 0.0;
    if (!fd_gradient_check(seed, &worst)) continue;
    ++checked;
    CAPTURE(seed);
    CHECK(worst <= 1e-4);
  }
  CHECK(checked >= 20);
}

TEST_CASE("psd_project") {
  SUBCASE("clamps a diagonal matrix") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 0) = 2.0;
    m(1, 1) = -1.0;
    const MetricMatrix p = psd_project(m);
    CHECK(std::abs(p.mat()(0, 0) - 2.0) <= 1e-12);
    CHECK(std::abs(p.mat()(1, 1)) <= 1e-12);
    CHECK(std::abs(p.mat()(0, 1)) <= 1e-12);
  }
  SUBCASE("identity is a fixed point") {
    const MetricMatrix p = psd_project(Eigen::MatrixXd::Identity(4, 4));
    CHECK((p.mat() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("rank-one reconstruction of [[0,1],[1,0]]") {
    Eigen::MatrixXd m(2, 2);
    m << 0, 1, 1, 0;
    const MetricMatrix p = psd_project(m);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) CHECK(p.mat()(r, c) == doctest::Approx(0.5));
    }
  }
  SUBCASE("idempotent and Frobenius-optimal on random symmetric input") {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 30; ++rep) {
      const Eigen::MatrixXd a = testsupport::random_symmetric(rng, 6);
      const MetricMatrix p = psd_project(a);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.mat());
      CHECK(es.eigenvalues().minCoeff() >= -1e-10);
      const MetricMatrix pp = psd_project(p.mat());
      CHECK((pp.mat() - p.mat()).cwiseAbs().maxCoeff() <= 1e-9);

      const double dist = (p.mat() - a).norm();
      for (int c = 0; c < 20; ++c) {
        const Eigen::MatrixXd competitor = testsupport::random_psd(rng, 6);
        CHECK(dist <= (competitor - a).norm() + 1e-9);
      }
    }
  }
  SUBCASE("non-finite input raises a numerical error") {
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(psd_project(bad), NumericalError);
  }
}

TEST_CASE("decompose_projection") {
  SUBCASE("identity gives an orthonormal square factor") {
    const Eigen::MatrixXd l = decompose_projection(MetricMatrix::identity(4), 4);
    CHECK((l.transpose() * l - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("single eigenpair of diag(4, 0)") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 0) = 4.0;
    const Eigen::MatrixXd l = decompose_projection(MetricMatrix(m), 1);
    REQUIRE(l.rows() == 1);
    CHECK(std::abs(l(0, 0)) == doctest::Approx(2.0));
    CHECK(l(0, 1) == doctest::Approx(0.0));
  }
  SUBCASE("full-rank reconstruction") {
    std::mt19937_64 rng(41);
    const Eigen::MatrixXd m = testsupport::random_psd(rng, 6);
    const Eigen::MatrixXd l = decompose_projection(MetricMatrix(m), 6);
    CHECK((l.transpose() * l - m).norm() / m.norm() <= 1e-8);
  }
  SUBCASE("out_dim larger than d is rejected") {
    CHECK_THROWS_AS(decompose_projection(MetricMatrix::identity(3), 4), InvalidInputError);
  }
}

TEST_CASE("train") {
  SUBCASE("separated data converges with an empty triggered set") {
    // inter-class gaps far exceed intra-class spans + rho under identity
    const auto samples = samples_1d({{0.0, "A"}, {0.5, "A"}, {50, "B"}, {50.4, "B"},
                                     {100, "C"}, {100.3, "C"}});
    TrainConfig cfg;
    cfg.max_iters = 200;
    const TrainReport report = train(samples, cfg);
    CHECK(report.loss_trace.back() < report.loss_trace.front());
    const auto trig = triggered_set(report.final_metric, samples, cfg.rho);
    CHECK(trig.triplets.empty());
    for (std::size_t i = 1; i < report.loss_trace.size(); ++i) {
      CHECK(report.loss_trace[i] < report.loss_trace[i - 1]);
    }
  }

  SUBCASE("alpha zero drives the metric toward zero") {
    std::mt19937_64 rng(7);
    const auto samples = testsupport::random_samples(rng, 8, 2, 4, 1.0);
    TrainConfig cfg;
    cfg.alpha = 0.0;
    cfg.max_iters = 300;
    const TrainReport report = train(samples, cfg);
    CHECK(report.loss_trace.back() <= 1e-6 * report.loss_trace.front());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(report.final_metric.mat());
    CHECK(es.eigenvalues().maxCoeff() < 1e-3);
  }

  SUBCASE("a zero step size changes nothing") {
    const auto samples = samples_1d({{0, "A"}, {1, "A"}, {5, "B"}});
    TrainConfig cfg;
    cfg.lambda0 = 0.0;
    cfg.max_iters = 1;
    const TrainReport report = train(samples, cfg);
    CHECK(report.loss_trace.size() == 1);
    CHECK((report.final_metric.mat() - Eigen::MatrixXd::Identity(1, 1)).cwiseAbs().maxCoeff() ==
          0.0);
  }

  SUBCASE("deterministic loss traces for a fixed seed") {
    std::mt19937_64 rng(13);
    const auto samples = testsupport::random_samples(rng, 4, 2, 6);
    TrainConfig cfg;
    cfg.max_iters = 40;
    cfg.rng_seed = 99;
    const TrainReport a = train(samples, cfg);
    const TrainReport b = train(samples, cfg);
    REQUIRE(a.loss_trace.size() == b.loss_trace.size());
    for (std::size_t i = 0; i < a.loss_trace.size(); ++i) {
      CHECK(a.loss_trace[i] == b.loss_trace[i]);
    }
  }

  SUBCASE("anchor subsampling stays deterministic and monotone") {
    std::mt19937_64 rng(19);
    const auto samples = testsupport::random_samples(rng, 5, 3, 6);
    TrainConfig cfg;
    cfg.anchor_fraction = 0.5;
    cfg.rng_seed = 4;
    cfg.max_iters = 60;
    const TrainReport a = train(samples, cfg);
    const TrainReport b = train(samples, cfg);
    CHECK(a.loss_trace == b.loss_trace);
    for (std::size_t i = 1; i < a.loss_trace.size(); ++i) {
      CHECK(a.loss_trace[i] < a.loss_trace[i - 1]);
    }
  }

  SUBCASE("every accepted iterate satisfies the PSD invariants") {
    std::mt19937_64 rng(29);
    const auto samples = testsupport::random_samples(rng, 4, 2, 5);
    TrainConfig cfg;
    cfg.max_iters = 50;
    const TrainReport report = train(samples, cfg);
    const Eigen::MatrixXd& m = report.final_metric.mat();
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * std::max(1.0, es.eigenvalues().maxCoeff()));
  }

  SUBCASE("config validation") {
    TrainConfig cfg;
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.lambda_down = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.lambda_up = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("metric scaling preserves rankings while scaling the pull term") {
  std::mt19937_64 rng(37);
  const auto samples = testsupport::random_samples(rng, 4, 2, 5);
  const Eigen::MatrixXd m = testsupport::random_psd(rng, 5);
  TrainConfig cfg;
  cfg.alpha = 0.0;
  const double f1 = objective(MetricMatrix(m), samples, cfg);
  const double f3 = objective(MetricMatrix(3.0 * m), samples, cfg);
  CHECK(f3 == doctest::Approx(3.0 * f1).epsilon(1e-9));
}
