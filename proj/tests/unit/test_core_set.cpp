#include "oracles.hpp"

#include <capi/core_set.hpp>
#include <capi/errors.hpp>
#include <capi/rng.hpp>

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <cmath>

using namespace capi;

namespace {

Eigen::VectorXd unit(Eigen::Index d, Eigen::Index i) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
  e[i] = 1.0;
  return e;
}

Eigen::VectorXd random_vector(StreamRng& rng, Eigen::Index d, double scale = 1.0) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

}  // namespace

TEST_SUITE("lse_cover") {
  TEST_CASE("append arithmetic") {
    CoreSet c(2, 0.25);
    c.append(0, 0, unit(2, 0));
    CHECK(c.v_matrix()(0, 0) == doctest::Approx(1.25));
    CHECK(c.v_matrix()(1, 1) == doctest::Approx(0.25));
    CHECK(c.v_inverse()(0, 0) == doctest::Approx(0.8));
    CHECK(c.v_inverse()(1, 1) == doctest::Approx(4.0));
    c.append(0, 0, unit(2, 0));
    CHECK(c.v_matrix()(0, 0) == doctest::Approx(2.25));
    CHECK(c.size() == 2);
  }

  TEST_CASE("incremental inverse tracks direct inversion") {
    StreamRng rng(3, 3);
    CoreSet c(5, 0.1);
    std::vector<Eigen::VectorXd> feats;
    for (int i = 0; i < 20; ++i) {
      feats.push_back(random_vector(rng, 5));
      c.append(static_cast<StateId>(i), 0, feats.back());
      CHECK((c.v_inverse() - oracle::gram_inverse(feats, 0.1)).norm() <= 1e-8);
    }
    CHECK(c.inverse_residual() <= 1e-8);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.v_matrix());
    CHECK(eig.eigenvalues().minCoeff() >= 0.1 - 1e-9);
  }

  TEST_CASE("removal") {
    CoreSet c(3, 0.5);
    CHECK_THROWS_AS(c.remove(0, 0), NotPresent);
    c.append(1, 2, unit(3, 1));
    c.remove(1, 2);
    CHECK((c.v_matrix() - 0.5 * Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-10);
    CHECK((c.v_inverse() - 2.0 * Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-10);
    CHECK(c.empty());

    StreamRng rng(5, 1);
    CoreSet d(4, 0.05);
    std::vector<std::pair<StateId, Eigen::VectorXd>> kept;
    for (StateId i = 0; i < 10; ++i) {
      kept.emplace_back(i, random_vector(rng, 4));
      d.append(i, 0, kept.back().second);
    }
    for (StateId s : {7, 2, 9, 0}) {
      d.remove(s, 0);
      std::erase_if(kept, [s](const auto& entry) { return entry.first == s; });
    }
    std::vector<Eigen::VectorXd> feats;
    for (const auto& entry : kept) feats.push_back(entry.second);
    CHECK(d.size() == 6);
    CHECK((d.v_inverse() - oracle::gram_inverse(feats, 0.05)).norm() <= 1e-8);
  }

  TEST_CASE("ill-conditioned downdates stay accurate") {
    // Tiny ridge: each removal cancels 1 - phi^T V^{-1} phi ~ lambda.
    CoreSet c(10, 1.0 / 640.0);
    c.set_verify_each_update(true);
    for (Eigen::Index i = 0; i < 10; ++i) c.append(static_cast<StateId>(i), 0, unit(10, i));
    for (Eigen::Index i = 9; i >= 0; --i) c.remove(static_cast<StateId>(i), 0);
    CHECK(c.drift_checks() == 20);
    CHECK(c.inverse_drift() <= 1e-8);
  }

  TEST_CASE("snapshot reconstruction") {
    CoreSet c(3, 0.2);
    c.append(0, 0, unit(3, 0));
    c.append(0, 1, unit(3, 2));
    const CoreSet copy = CoreSet::from_snapshot(3, 0.2, c.pairs(), c.features(), c.v_inverse());
    CHECK(copy.v_matrix() == c.v_matrix());
    CHECK(copy.v_inverse() == c.v_inverse());
    CHECK(copy.contains(0, 1));
    CHECK_THROWS_AS(CoreSet::from_snapshot(3, 0.2, c.pairs(), {}, c.v_inverse()), LengthMismatch);
  }

  TEST_CASE("least-squares estimate") {
    CoreSet empty(2, 0.01);
    CHECK(empty.lse({}, unit(2, 0)) == 0.0);
    CoreSet c(2, 0.01);
    c.append(0, 0, unit(2, 0));
    const std::vector<double> qbar{1.0};
    CHECK(c.lse(qbar, unit(2, 0)) == doctest::Approx(1.0 / 1.01).epsilon(1e-12));
    CHECK(c.lse(qbar, unit(2, 1)) == 0.0);
    CHECK_THROWS_AS(c.lse(std::vector<double>{1.0, 2.0}, unit(2, 0)), LengthMismatch);
    CHECK(c.theta(qbar)[0] == doctest::Approx(1.0 / 1.01));
  }

  TEST_CASE("cover membership") {
    CoreSet c(2, 0.01);
    CHECK(c.weighted_norm_sq(unit(2, 0)) == doctest::Approx(100.0));
    CHECK_FALSE(c.in_action_cover(unit(2, 0)));
    CHECK(c.in_action_cover(Eigen::VectorXd::Zero(2)));
    c.append(0, 0, unit(2, 0));
    CHECK(c.weighted_norm_sq(unit(2, 0)) == doctest::Approx(1.0 / 1.01));
    CHECK(c.in_action_cover(unit(2, 0)));

    const FeatureMap hot = FeatureMap::one_hot(2, 2, 1.0);
    CoreSet d(4, 0.01);
    d.append(0, 0, hot);
    CHECK_FALSE(d.in_cover(0, hot));
    d.append(0, 1, hot);
    CHECK(d.in_cover(0, hot));
    CHECK_FALSE(d.in_cover(1, hot));
  }

  TEST_CASE("growth bound formula") {
    CHECK(d_tilde(3, 1, 0.25) == doctest::Approx(12.0 * std::log(17.0)));
    CHECK(d_tilde(3, 1, 0.25) == doctest::Approx(33.998).epsilon(1e-4));
    CHECK(d_tilde(3, 1, 4.0) == doctest::Approx(8.318).epsilon(1e-4));
  }

  TEST_CASE("covers only grow under appends") {
    StreamRng rng(12, 0);
    CoreSet c(4, 0.3);
    std::vector<Eigen::VectorXd> probes;
    for (int i = 0; i < 200; ++i) probes.push_back(random_vector(rng, 4, 0.8));
    std::vector<bool> covered(probes.size(), false);
    for (int step = 0; step < 30; ++step) {
      c.append(0, 0, random_vector(rng, 4));
      for (std::size_t p = 0; p < probes.size(); ++p) {
        const bool now = c.in_action_cover(probes[p]);
        CHECK((now || !covered[p]));
        covered[p] = now;
      }
    }
  }

  TEST_CASE("elliptical potential: uncovered appends are bounded by d_tilde") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      StreamRng rng(seed, 9);
      const Eigen::Index d = 3;
      const double lambda = 0.05;
      CoreSet c(d, lambda);
      int appended = 0;
      for (int attempt = 0; attempt < 20000; ++attempt) {
        Eigen::VectorXd phi = random_vector(rng, d);
        if (phi.norm() > 1.0) phi /= phi.norm();
        if (!c.in_action_cover(phi)) {
          c.append(0, 0, phi);
          ++appended;
        }
      }
      CHECK(static_cast<double>(appended) <= d_tilde(3, 1.0, lambda));
    }
  }
}
