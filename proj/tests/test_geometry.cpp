#include <doctest.h>

#include <cmath>
#include <random>

#include "dynba/error.hpp"
#include "dynba/geometry.hpp"
#include "oracles.hpp"

using namespace dynba;

namespace {

constexpr double kPi = 3.14159265358979323846;

Twist twist(double a, double b, double c, double d, double e, double f) {
  return Twist{Eigen::Vector3d(a, b, c), Eigen::Vector3d(d, e, f)};
}

Intrinsics grid_camera() { return {100.0, 100.0, 32.0, 24.0, 64, 48}; }

Pose random_exp_pose(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return se3_exp(twist(n(rng), n(rng), n(rng), n(rng), n(rng), n(rng)));
}

}  // namespace

TEST_CASE("se3_exp closed forms") {
  const Pose id = se3_exp(Twist{});
  CHECK(id.translation().norm() == 0.0);
  CHECK(rotation_angle(id.rotation()) == 0.0);

  const Pose t = se3_exp(twist(1, 2, 3, 0, 0, 0));
  CHECK((t.translation() - Eigen::Vector3d(1, 2, 3)).norm() < 1e-15);
  CHECK(rotation_angle(t.rotation()) < 1e-15);

  const Pose r = se3_exp(twist(0, 0, 0, 0, 0, kPi / 2));
  Eigen::Matrix3d expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((r.rotation_matrix() - expected).norm() < 1e-12);
  CHECK(r.translation().norm() < 1e-15);
}

TEST_CASE("se3_exp agrees with the matrix exponential") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 0.8);
  for (int k = 0; k < 50; ++k) {
    const oracle::Vector6d xi = (oracle::Vector6d() << n(rng), n(rng), n(rng), n(rng), n(rng), n(rng)).finished();
    const Eigen::Matrix4d m = se3_exp(Twist::from_vector(xi)).matrix();
    CHECK((m - oracle::expm(xi)).norm() < 1e-10);
  }
}

TEST_CASE("se3_log examples") {
  const Twist zero = se3_log(Pose::identity());
  CHECK(zero.vector().norm() == 0.0);

  const Twist xi = twist(0.5, 0, 0, 0, 0.3, 0);
  CHECK((se3_log(se3_exp(xi)).vector() - xi.vector()).norm() < 1e-10);

  const Eigen::Vector3d axis = Eigen::Vector3d::Ones().normalized();
  const Pose p(Eigen::Quaterniond(Eigen::AngleAxisd(2 * kPi / 3, axis)), Eigen::Vector3d::Zero());
  CHECK((se3_log(p).phi - (2 * kPi / 3) * axis).norm() < 1e-12);
  CHECK(se3_log(p).rho.norm() < 1e-12);
}

TEST_CASE("se3_log rejects rotations near pi") {
  const Pose p(Eigen::Quaterniond(Eigen::AngleAxisd(kPi - 1e-8, Eigen::Vector3d::UnitY())), Eigen::Vector3d::Zero());
  try {
    se3_log(p);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NearPiRotation);
  }
}

TEST_CASE("exp/log roundtrip over random twists") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    Eigen::Vector3d dir(n(rng), n(rng), n(rng));
    // Include the small-angle branch.
    const double a = k % 10 == 0 ? 1e-9 * angle(rng) : angle(rng);
    const Twist xi{Eigen::Vector3d(n(rng), n(rng), n(rng)), dir.normalized() * a};
    worst = std::max(worst, (se3_log(se3_exp(xi)).vector() - xi.vector()).norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("compose, inverse and relative") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const Pose a = random_exp_pose(rng), b = random_exp_pose(rng), c = random_exp_pose(rng);
    CHECK((compose(a, inverse(a)).matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-12);
    CHECK((compose(Pose::identity(), a).matrix() - a.matrix()).norm() < 1e-14);
    CHECK((relative(a, a).matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-12);
    const Eigen::Matrix4d expected = oracle::matrix(b).inverse() * oracle::matrix(a);
    CHECK((relative(a, b).matrix() - expected).norm() < 1e-10);
    CHECK((compose(compose(a, b), c).matrix() - compose(a, compose(b, c)).matrix()).norm() < 1e-12);
    CHECK(std::abs(compose(a, b).rotation().norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("retract is a left perturbation with unit quaternion") {
  std::mt19937_64 rng(4);
  const Pose p = random_exp_pose(rng);
  const oracle::Vector6d d = (oracle::Vector6d() << 0.1, -0.2, 0.05, 0.02, 0.3, -0.1).finished();
  CHECK((retract(p, d).matrix() - oracle::expm(d) * oracle::matrix(p)).norm() < 1e-12);
  CHECK(std::abs(retract(p, d).rotation().norm() - 1.0) < 1e-12);
}

TEST_CASE("backproject and project examples") {
  const Intrinsics k = grid_camera();
  CHECK((backproject({k.cx, k.cy}, 0.5, k) - Eigen::Vector3d(0, 0, 2)).norm() == 0.0);
  CHECK((backproject({42, k.cy}, 1.0, k) - Eigen::Vector3d(0.1, 0, 1)).norm() < 1e-15);
  CHECK_THROWS_AS(backproject({1, 1}, 0.0, k), Error);
  CHECK_THROWS_AS(backproject({1, 1}, -0.5, k), Error);

  const Projection a = project({0, 0, 2}, k);
  CHECK(a.valid);
  CHECK(a.depth == 2.0);
  CHECK((a.pixel - Eigen::Vector2d(k.cx, k.cy)).norm() == 0.0);
  CHECK_FALSE(project({0, 0, -1}, k).valid);
  const Projection b = project({0.1, 0, 1}, k);
  CHECK(b.valid);
  CHECK((b.pixel - Eigen::Vector2d(42, k.cy)).norm() < 1e-12);
  CHECK_FALSE(project({10, 0, 1}, k).valid);
}

TEST_CASE("project inverts backproject on every in-bounds pixel") {
  const Intrinsics k = grid_camera();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> logd(std::log(1e-4), std::log(1e2));
  double worst = 0.0;
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const double d = std::exp(logd(rng));
      const Projection p = project(backproject({x * 1.0, y * 1.0}, d, k), k);
      REQUIRE(p.valid);
      worst = std::max(worst, (p.pixel - Eigen::Vector2d(x, y)).norm());
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("intrinsics validation and downsampling") {
  Intrinsics k{400, 400, 320, 240, 640, 480};
  CHECK_NOTHROW(k.validate());
  const Intrinsics g = k.downsampled(8);
  CHECK(g == Intrinsics{50, 50, 40, 30, 80, 60});
  CHECK_THROWS_AS(Intrinsics({400, 400, 320, 240, 644, 480}).downsampled(8), Error);
  CHECK_THROWS_AS(Intrinsics({-1, 400, 320, 240, 640, 480}).validate(), Error);
  CHECK_THROWS_AS(Intrinsics({400, 400, 640, 240, 640, 480}).validate(), Error);
}

TEST_CASE("induced flow examples") {
  const Intrinsics k = grid_camera();
  const DisparityMap d(k.width, k.height, 0.5);

  const FlowField still = induced_flow(Pose::identity(), Pose::identity(), d, k);
  for (std::size_t q = 0; q < still.vectors.size(); ++q) {
    CHECK(still.is_valid(q));
    CHECK(still.vectors[q].norm() < 1e-12);
  }

  const Pose moved(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0.1, 0, 0));
  const FlowField lateral = induced_flow(Pose::identity(), moved, d, k);
  for (std::size_t q = 0; q < lateral.vectors.size(); ++q) {
    if (!lateral.is_valid(q)) continue;
    CHECK(std::abs(lateral.vectors[q].x() + 5.0) < 1e-12);
    CHECK(std::abs(lateral.vectors[q].y()) < 1e-12);
  }
  // Pixels whose target leaves the left edge are invalid.
  CHECK_FALSE(lateral.is_valid(lateral.vectors.index(0, 0)));
  CHECK(lateral.is_valid(lateral.vectors.index(5, 0)));

  const Pose turned(Eigen::Quaterniond(Eigen::AngleAxisd(kPi, Eigen::Vector3d::UnitY())), Eigen::Vector3d::Zero());
  const FlowField behind = induced_flow(Pose::identity(), turned, d, k);
  for (std::size_t q = 0; q < behind.valid.size(); ++q) CHECK_FALSE(behind.is_valid(q));
}

TEST_CASE("induced flow gauge invariance") {
  const Intrinsics k = grid_camera();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.2, 0.6);
  DisparityMap d(k.width, k.height);
  for (auto& v : d.values()) v = u(rng);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose pi = random_exp_pose(rng, 0.05), pj = random_exp_pose(rng, 0.05);
    const Pose g = random_exp_pose(rng, 2.0);
    const FlowField a = induced_flow(pi, pj, d, k);
    const FlowField b = induced_flow(compose(g, pi), compose(g, pj), d, k);
    const FlowField z = induced_flow(pi, pi, d, k);
    for (std::size_t q = 0; q < a.vectors.size(); ++q) {
      CHECK(z.vectors[q].norm() < 1e-12);
      if (a.is_valid(q) && b.is_valid(q)) CHECK((a.vectors[q] - b.vectors[q]).norm() < 1e-9);
    }
  }
}

TEST_CASE("dynamic induced flow") {
  const Intrinsics k = grid_camera();
  std::mt19937_64 rng(8);
  DisparityMap d(k.width, k.height, 1.0);
  const Pose pi = random_exp_pose(rng, 0.03), pj = random_exp_pose(rng, 0.03);

  DisplacementField none(k.width, k.height, Eigen::Vector3d::Zero());
  const FlowField a = induced_flow(pi, pj, d, k);
  const FlowField b = induced_flow_dynamic(pi, pj, d, none, k);
  CHECK(a.vectors == b.vectors);
  CHECK(a.valid == b.valid);

  DisplacementField x(k.width, k.height, Eigen::Vector3d::Zero());
  x.at(10, 10) = Eigen::Vector3d(0.05, 0, 0);
  x.at(11, 10) = Eigen::Vector3d(0, 0, -2.0);
  const FlowField s = induced_flow_dynamic(Pose::identity(), Pose::identity(), d, x, k);
  CHECK((s.vectors.at(10, 10) - Eigen::Vector2d(5, 0)).norm() < 1e-12);
  CHECK(s.valid.at(10, 10) == 1);
  CHECK(s.valid.at(11, 10) == 0);
  CHECK(s.vectors.at(12, 10).norm() < 1e-12);
}

TEST_CASE("reprojection jacobians match central differences") {
  const Intrinsics k = grid_camera();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  double worst = 0.0;
  while (checked < 100) {
    const Pose pi = random_exp_pose(rng, 0.1), pj = random_exp_pose(rng, 0.1);
    const Eigen::Vector2d px(u(rng) * (k.width - 1), u(rng) * (k.height - 1));
    const double disp = 0.2 + 0.6 * u(rng);
    ReprojectionJacobians j;
    try {
      j = reprojection_jacobians(pi, pj, disp, k, px);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidPixel);
      continue;
    }
    const oracle::Jacobians num = oracle::numeric_jacobians(pi, pj, px, disp, k);
    worst = std::max({worst, oracle::relative_error(j.pose_i, num.pose_i), oracle::relative_error(j.pose_j, num.pose_j),
                      oracle::relative_error(j.disparity, num.disparity)});
    CHECK((j.target - oracle::reproject(oracle::matrix(pi), oracle::matrix(pj), px, disp, k)).norm() < 1e-10);
    ++checked;
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("reprojection jacobian special cases") {
  const Intrinsics k = grid_camera();
  std::mt19937_64 rng(10);
  const Pose p = random_exp_pose(rng, 0.2);
  DisparityMap d(k.width, k.height, 0.4);
  const ReprojectionJacobians same = reprojection_jacobians(p, p, d, k, {7, 9});
  CHECK(same.disparity.norm() < 1e-12);
  CHECK((same.pose_i + same.pose_j).rightCols<3>().norm() < 1e-12);
  const oracle::Jacobians num = oracle::numeric_jacobians(p, p, {7, 9}, 0.4, k);
  CHECK((num.pose_i + num.pose_j).rightCols<3>().norm() < 1e-6);

  const Pose turned(Eigen::Quaterniond(Eigen::AngleAxisd(kPi, Eigen::Vector3d::UnitY())), Eigen::Vector3d::Zero());
  CHECK_THROWS_AS(reprojection_jacobians(Pose::identity(), turned, d, k, {7, 9}), Error);
}

TEST_CASE("flow statistics") {
  FlowField f(2, 2);
  f.vectors[0] = {3, 4};
  f.valid[0] = 1;
  f.vectors[1] = {0, 1};
  f.valid[1] = 1;
  f.vectors[2] = {100, 0};
  const FlowStatistics s = flow_statistics(f);
  CHECK(s.mean_magnitude == doctest::Approx(3.0));
  CHECK(s.valid_fraction == doctest::Approx(0.5));
  CHECK(s.valid_count == 2);
}

TEST_CASE("sim3 transform") {
  std::mt19937_64 rng(11);
  const Pose r = random_exp_pose(rng);
  const Sim3Transform s(2.5, r.rotation(), r.translation());
  const Eigen::Vector3d x(0.3, -1.0, 2.0);
  CHECK((s.inverse().apply(s.apply(x)) - x).norm() < 1e-12);
  const Pose p = random_exp_pose(rng);
  const Pose mapped = s.apply(p);
  CHECK((mapped.translation() - s.apply(p.translation())).norm() < 1e-12);
  CHECK(mapped.rotation().angularDistance(r.rotation() * p.rotation()) < 1e-12);
  CHECK_THROWS_AS(Sim3Transform(0.0, r.rotation(), r.translation()), Error);
}
