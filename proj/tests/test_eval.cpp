#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "dynba/error.hpp"
#include "dynba/eval.hpp"
#include "dynba/tum.hpp"
#include "oracles.hpp"

using namespace dynba;

namespace {

Trajectory random_trajectory(std::mt19937_64& rng, int n) {
  Trajectory t;
  for (int k = 0; k < n; ++k) t.push_back(0.1 * k, oracle::random_pose(rng, 1.0, 3.0));
  return t;
}

Sim3Transform random_sim3(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> logs(std::log(0.05), std::log(20.0));
  const Pose p = oracle::random_pose(rng, 3.0, 50.0);
  return Sim3Transform(std::exp(logs(rng)), p.rotation(), p.translation());
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("umeyama on identical trajectories is the identity") {
  std::mt19937_64 rng(1);
  const Trajectory t = random_trajectory(rng, 10);
  const Sim3Transform s = umeyama_align(t, t);
  CHECK(s.scale() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.translation().norm() < 1e-10);
  CHECK(rotation_angle(s.rotation()) < 1e-10);
}

TEST_CASE("umeyama recovers the scale of a doubled trajectory") {
  std::mt19937_64 rng(2);
  const Trajectory gt = random_trajectory(rng, 8);
  const Trajectory doubled = apply(Sim3Transform(2.0, Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero()), gt);
  CHECK(umeyama_align(doubled, gt).scale() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("umeyama recovers the inverse of a random similarity") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Trajectory gt = random_trajectory(rng, 12);
    const Sim3Transform s = random_sim3(rng);
    const Trajectory est = apply(s, gt);
    const Sim3Transform back = umeyama_align(est, gt);
    CHECK(back.scale() * s.scale() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ate_rmse(apply(back, est), gt).rmse < 1e-9);
    CHECK(evaluate_ate(est, gt).rmse < 1e-9);
  }
}

TEST_CASE("ate is invariant to a similarity pre-transform of the estimate") {
  std::mt19937_64 rng(4);
  const Trajectory gt = random_trajectory(rng, 20);
  Trajectory est;
  std::normal_distribution<double> n(0.0, 0.05);
  for (const auto& e : gt.entries) {
    est.push_back(e.timestamp, Pose(e.pose.rotation(), e.pose.translation() + Eigen::Vector3d(n(rng), n(rng), n(rng))));
  }
  const double base = evaluate_ate(est, gt).rmse;
  CHECK(base > 0.01);
  for (int trial = 0; trial < 20; ++trial) CHECK(std::abs(evaluate_ate(apply(random_sim3(rng), est), gt).rmse - base) < 1e-9);
}

TEST_CASE("degenerate alignments") {
  Trajectory a, b;
  a.push_back(0.0, Pose::identity());
  a.push_back(0.1, Pose::identity());
  b = a;
  CHECK(code_of([&] { umeyama_align(a, b); }) == ErrorCode::DegenerateGeometry);
  a.push_back(0.2, Pose::identity());
  b.push_back(0.2, Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d::UnitX()));
  CHECK(code_of([&] { umeyama_align(a, b); }) == ErrorCode::DegenerateGeometry);
  b.push_back(0.3, Pose::identity());
  CHECK(code_of([&] { umeyama_align(a, b); }) == ErrorCode::LengthMismatch);

  // Pure rotation: every center coincides, so only the centroid is aligned.
  const AteReport r = evaluate_ate(a, a);
  CHECK(r.alignment_mode == "translation");
  CHECK(r.rmse == 0.0);
}

TEST_CASE("collinear trajectories still align") {
  Trajectory gt;
  for (int k = 0; k < 10; ++k) gt.push_back(0.1 * k, Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0.3 * k, 0, 0)));
  std::mt19937_64 rng(5);
  const Trajectory est = apply(random_sim3(rng), gt);
  const AteReport r = evaluate_ate(est, gt);
  CHECK(r.alignment_mode == "sim3");
  CHECK(r.rmse < 1e-9);
}

TEST_CASE("ate rmse arithmetic") {
  Trajectory gt, est;
  gt.push_back(0.0, Pose::identity());
  gt.push_back(1.0, Pose::identity());
  est.push_back(0.0, Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0.3, 0, 0)));
  est.push_back(1.0, Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0, 0.4, 0)));
  const AteReport r = ate_rmse(est, gt);
  CHECK(r.rmse == doctest::Approx(std::sqrt(0.125)).epsilon(1e-15));
  CHECK(r.errors.size() == 2);
  CHECK(r.errors[1] == doctest::Approx(0.4));
  CHECK(ate_rmse(gt, gt).rmse == 0.0);

  Trajectory shifted;
  for (const auto& e : gt.entries) shifted.push_back(e.timestamp, Pose(e.pose.rotation(), Eigen::Vector3d(1, 2, 2)));
  CHECK(ate_rmse(shifted, gt).rmse == doctest::Approx(3.0));

  gt.push_back(2.0, Pose::identity());
  CHECK(code_of([&] { ate_rmse(est, gt); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("timestamp association") {
  Trajectory est, gt;
  for (int k = 0; k < 5; ++k) gt.push_back(0.1 * k, Pose::identity());
  est.push_back(0.005, Pose::identity());
  est.push_back(0.21, Pose::identity());
  est.push_back(0.35, Pose::identity());
  const auto [e, g] = associate(est, gt);
  REQUIRE(e.size() == 2);
  CHECK(g.entries[0].timestamp == 0.0);
  CHECK(g.entries[1].timestamp == doctest::Approx(0.2));
  CHECK(e.entries[1].timestamp == doctest::Approx(0.21));
}

TEST_CASE("trajectory timestamps must increase") {
  Trajectory t;
  t.push_back(1.0, Pose::identity());
  CHECK_THROWS_AS(t.push_back(1.0, Pose::identity()), Error);
  CHECK_THROWS_AS(t.push_back(0.5, Pose::identity()), Error);
}

TEST_CASE("geodesic pose error") {
  const GeodesicError zero = pose_geodesic_error(Pose::identity(), Pose::identity());
  CHECK(zero.trans_norm == 0.0);
  CHECK(zero.rot_norm == 0.0);

  const Pose rz(Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ())), Eigen::Vector3d::Zero());
  CHECK(pose_geodesic_error(rz, Pose::identity()).rot_norm == doctest::Approx(M_PI / 2).epsilon(1e-14));
  CHECK(pose_geodesic_error(rz, Pose::identity()).trans_norm < 1e-15);

  const Pose t(Eigen::Quaterniond::Identity(), Eigen::Vector3d(3, 4, 0));
  const GeodesicError e = pose_geodesic_error(t, Pose::identity());
  CHECK(e.trans_norm == doctest::Approx(5.0));
  CHECK(e.loss() == doctest::Approx(2.5));

  const Pose flip(Eigen::Quaterniond(Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitX())), Eigen::Vector3d::Zero());
  CHECK(code_of([&] { pose_geodesic_error(flip, Pose::identity()); }) == ErrorCode::NearPiRotation);
}

TEST_CASE("geodesic error symmetry and left invariance") {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 50; ++k) {
    const Pose a = oracle::random_pose(rng, 1.2, 1.0), b = oracle::random_pose(rng, 1.2, 1.0);
    const Pose g = oracle::random_pose(rng, 3.0, 5.0);
    const GeodesicError ab = pose_geodesic_error(a, b), ba = pose_geodesic_error(b, a);
    CHECK(ab.rot_norm == doctest::Approx(ba.rot_norm).epsilon(1e-10));
    const GeodesicError shifted = pose_geodesic_error(compose(g, a), compose(g, b));
    CHECK(shifted.rot_norm == doctest::Approx(ab.rot_norm).epsilon(1e-9));
  }
}

TEST_CASE("camera loss over pairs") {
  const std::vector<Pose> gt{Pose::identity(), Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d(1, 0, 0))};
  CHECK(camera_loss(gt, gt, {{0, 1}, {1, 0}}) == 0.0);
  const std::vector<Pose> est{Pose::identity(), Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d(1.5, 0, 0))};
  CHECK(camera_loss(gt, est, {{0, 1}}) == doctest::Approx(0.25));
}

TEST_CASE("temporal weights") {
  const std::vector<double> w = temporal_weights(kDefaultUnrollSteps, 0.9);
  REQUIRE(w.size() == 15);
  CHECK(w[14] == 1.0);
  CHECK(w[13] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(w[0] == doctest::Approx(0.228768).epsilon(1e-6));
  CHECK(w[0] == doctest::Approx(std::pow(0.9, 14)).epsilon(1e-15));
  for (std::size_t k = 1; k < w.size(); ++k) CHECK(w[k] > w[k - 1]);
  LossWeights lw;
  lw.gamma = 0.0;
  CHECK_THROWS_AS(lw.validate(), Error);
  lw.gamma = 1.5;
  CHECK_THROWS_AS(lw.validate(), Error);
}

TEST_CASE("flow and residual losses") {
  FlowField gt(3, 1);
  for (int q = 0; q < 3; ++q) {
    gt.vectors[q] = {1.0, 0.0};
    gt.valid[q] = 1;
  }
  const std::vector<FlowField> exact(3, gt);
  CHECK(flow_and_residual_losses(exact, exact, gt, LossWeights{}).total == 0.0);

  FlowField off = gt;
  off.vectors[0] = {1.0, 3.0};
  off.vectors[1] = {4.0, 4.0};
  const std::vector<FlowField> induced{off, gt};
  const std::vector<FlowField> predicted{gt, gt};
  LossWeights lw;
  const LossReport r = flow_and_residual_losses(induced, predicted, gt, lw);
  // Step 1: L2 errors 3, 5, 0 and L1 residuals 3, 7, 0; weight 0.9.
  CHECK(r.per_step_flow[0] == doctest::Approx(8.0 / 3.0));
  CHECK(r.per_step_residual[0] == doctest::Approx(10.0 / 3.0));
  CHECK(r.per_step_flow[1] == 0.0);
  CHECK(r.flow_total == doctest::Approx(0.9 * 8.0 / 3.0));
  CHECK(r.total == doctest::Approx(0.9 * 18.0 / 3.0));

  LossWeights scaled = lw;
  scaled.w_flow *= 3.0;
  scaled.w_res *= 3.0;
  CHECK(flow_and_residual_losses(induced, predicted, gt, scaled).total == doctest::Approx(3.0 * r.total));
  CHECK(operator_loss(1.0, 2.0, 3.0, scaled) == doctest::Approx(1.0 + 6.0 + 9.0));
  CHECK(mask_stage_loss(2.0, std::log(2.0), lw) == doctest::Approx(2.0 + std::log(2.0)));

  CHECK(code_of([&] { flow_and_residual_losses(induced, exact, gt, lw); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("tum roundtrip") {
  std::mt19937_64 rng(7);
  Trajectory t;
  for (int k = 0; k < 24; ++k) t.push_back(1e9 + k / 30.0, oracle::random_pose(rng, 3.0, 10.0));
  std::stringstream a;
  write_tum(a, t);
  const Trajectory back = read_tum(a);
  REQUIRE(back.size() == t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    CHECK(std::abs(back.entries[k].timestamp - t.entries[k].timestamp) < 1e-9);
    CHECK((back.entries[k].pose.translation() - t.entries[k].pose.translation()).norm() < 1e-9);
    CHECK(back.entries[k].pose.rotation().angularDistance(t.entries[k].pose.rotation()) < 1e-8);
  }
}

TEST_CASE("tum parsing") {
  std::vector<std::string> warnings;
  std::istringstream ok("# comment\n\n0.0 1 2 3 0 0 0 1\n0.1 0 0 0 0 0 0 1.0005\n");
  const Trajectory t = read_tum(ok, &warnings);
  CHECK(t.size() == 2);
  CHECK(t.entries[0].pose.translation() == Eigen::Vector3d(1, 2, 3));
  CHECK(std::abs(t.entries[1].pose.rotation().norm() - 1.0) < 1e-12);
  CHECK(warnings.size() == 1);

  std::istringstream bad_q("0.0 0 0 0 0 0 0 2\n");
  CHECK(code_of([&] { read_tum(bad_q); }) == ErrorCode::NonUnitQuaternion);
  std::istringstream short_line("0.0 1 2 3\n");
  try {
    read_tum(short_line);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  std::istringstream junk("0.0 a 2 3 0 0 0 1\n");
  CHECK(code_of([&] { read_tum(junk); }) == ErrorCode::ParseError);
  CHECK(code_of([] { read_tum(std::filesystem::path("/nonexistent/x.tum")); }) == ErrorCode::IoError);
}
