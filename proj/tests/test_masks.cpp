#include <doctest.h>

#include <cmath>

#include "dynba/error.hpp"
#include "dynba/masks.hpp"
#include "dynba/synth.hpp"

using namespace dynba;

namespace {

ScenarioSpec transient_scene() {
  ScenarioSpec spec;
  spec.n_frames = 12;
  spec.pattern.kind = PatternKind::TargetLocked;
  spec.pattern.path = TargetPath::Lateral;
  spec.pattern.radius = 4.0;
  spec.pattern.extent = 0.5;
  DynamicObject o;
  o.x0 = 8;
  o.y0 = 6;
  o.width = 6;
  o.height = 5;
  o.velocity = Eigen::Vector3d(0.05, 0.0, 0.0);
  o.active_begin = 5;
  o.active_end = 9;
  spec.objects.push_back(o);
  return spec;
}

class NoTruth final : public MotionTruth {
 public:
  std::optional<DisplacementField> displacement(int, int) const override { return std::nullopt; }
};

}  // namespace

TEST_CASE("oracle mask thresholds displacement magnitude") {
  DisplacementField x(4, 3, Eigen::Vector3d::Zero());
  CHECK(oracle_mask(x, 0.01) == MotionMask(4, 3, 1.0));

  x.at(1, 1) = Eigen::Vector3d(0.2, 0, 0);
  x.at(2, 1) = Eigen::Vector3d(0, 0.2, 0);
  x.at(3, 2) = Eigen::Vector3d(0.003, 0.004, 0);
  const MotionMask m = oracle_mask(x, 0.01);
  for (int y = 0; y < 3; ++y) {
    for (int u = 0; u < 4; ++u) {
      const bool moving = (y == 1 && (u == 1 || u == 2));
      CHECK(m.at(u, y) == (moving ? 0.0 : 1.0));
    }
  }
}

TEST_CASE("oracle mask without ground truth") {
  const NoTruth none;
  try {
    oracle_mask(0, 1, &none);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingGroundTruth);
  }
  CHECK_THROWS_AS(oracle_mask(0, 1, nullptr), Error);
}

TEST_CASE("oracle mask is pairwise") {
  const SceneTruth truth = gen_scene(transient_scene());
  // The object rests before frame 5, so 0 -> 3 sees it static and 0 -> 8 sees it move.
  const MotionMask still = oracle_mask(0, 3, &truth);
  const MotionMask moving = oracle_mask(0, 8, &truth);
  CHECK(still == MotionMask(still.width(), still.height(), 1.0));
  for (std::size_t q = 0; q < moving.size(); ++q) {
    CHECK((moving[q] == 0.0 || moving[q] == 1.0));
    CHECK((moving[q] == 0.0) == (truth.labels[q] >= 0));
  }
}

TEST_CASE("oracle mask matches the displacement field on every pair") {
  const SceneTruth truth = gen_scene(transient_scene());
  for (int i = 0; i < 12; i += 3) {
    for (int j = 0; j < 12; j += 4) {
      if (i == j) continue;
      const DisplacementField x = *truth.displacement(i, j);
      const MotionMask m = oracle_mask(i, j, &truth);
      for (std::size_t q = 0; q < m.size(); ++q) CHECK((m[q] == 0.0) == (x[q].norm() > kDefaultOracleEpsilon));
    }
  }
}

TEST_CASE("residual mask kernel") {
  VectorGrid r(4, 1, Eigen::Vector2d::Zero());
  r[1] = {3.0, 0.0};
  r[2] = {0.0, 30.0};
  r[3] = {1e6, 0.0};
  const MotionMask m = residual_mask(r, 3.0);
  CHECK(m[0] == 1.0);
  CHECK(m[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(m[1] == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(m[2] < 1e-43);
  CHECK(m[3] == 0.0);
  CHECK_THROWS_AS(residual_mask(r, 0.0), Error);
  CHECK_THROWS_AS(residual_mask(r, -1.0), Error);
}

TEST_CASE("residual mask is non-increasing in the residual norm") {
  VectorGrid r(200, 1, Eigen::Vector2d::Zero());
  for (int k = 0; k < 200; ++k) r[k] = Eigen::Vector2d(0.6, 0.8) * (0.05 * k);
  const MotionMask m = residual_mask(r, 2.0);
  for (int k = 1; k < 200; ++k) CHECK(m[k] <= m[k - 1]);
  for (double v : m.values()) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("mask metrics") {
  MotionMask truth(4, 2, 1.0);
  truth[1] = 0.0;
  truth[6] = 0.0;
  const MaskMetrics same = mask_metrics(truth, truth);
  CHECK(same.bce <= 1.6e-6);
  CHECK(same.iou == 1.0);

  const MaskMetrics half = mask_metrics(MotionMask(4, 2, 0.5), truth);
  CHECK(half.bce == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  MotionMask flipped = truth;
  for (auto& v : flipped.values()) v = 1.0 - v;
  CHECK(mask_metrics(flipped, truth).iou == 0.0);
  CHECK(mask_metrics(flipped, truth).bce > 10.0);

  MotionMask near = truth;
  near[0] = 0.9;
  CHECK(mask_metrics(near, truth).bce > same.bce);

  CHECK_THROWS_AS(mask_metrics(MotionMask(3, 2, 1.0), truth), Error);
}

TEST_CASE("mask providers") {
  const SceneTruth truth = gen_scene(transient_scene());
  EdgeObservation obs;
  obs.flow_pred = FlowField(truth.intrinsics.width, truth.intrinsics.height);
  EdgeContext ctx{0, 8, &obs, nullptr};

  const auto oracle = make_mask_provider(MaskProviderKind::Oracle, &truth);
  CHECK(oracle->mask(ctx) == oracle_mask(0, 8, &truth));
  CHECK(oracle->mask(ctx) == oracle->mask(ctx));

  const auto unit = make_mask_provider(MaskProviderKind::None, nullptr);
  CHECK(unit->mask(ctx) == MotionMask(obs.flow_pred.width(), obs.flow_pred.height(), 1.0));

  const auto residual = make_mask_provider(MaskProviderKind::Residual, nullptr, 0.01, 2.0);
  CHECK(residual->mask(ctx) == MotionMask(obs.flow_pred.width(), obs.flow_pred.height(), 1.0));
  VectorGrid r(obs.flow_pred.width(), obs.flow_pred.height(), Eigen::Vector2d(2.0, 0.0));
  ctx.residual = &r;
  CHECK(residual->mask(ctx) == residual_mask(r, 2.0));

  CHECK(parse_mask_provider(to_string(MaskProviderKind::Residual)) == MaskProviderKind::Residual);
  CHECK_THROWS_AS(parse_mask_provider("learned"), Error);
}
