#include "dynba/masks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dynba/error.hpp"

namespace dynba {

namespace {

constexpr double kProbabilityClamp = 1e-7;

const EdgeObservation& require_observation(const EdgeContext& edge) {
  if (edge.observation == nullptr || !edge.observation->filled()) {
    throw Error(ErrorCode::ShapeMismatch, "mask provider needs a filled observation");
  }
  return *edge.observation;
}

}  // namespace

MotionMask oracle_mask(const DisplacementField& displacement, double epsilon) {
  MotionMask m(displacement.width(), displacement.height(), 1.0);
  for (std::size_t p = 0; p < displacement.size(); ++p) {
    if (displacement[p].norm() > epsilon) m[p] = 0.0;
  }
  return m;
}

MotionMask oracle_mask(int src_frame, int dst_frame, const MotionTruth* truth, double epsilon) {
  if (truth == nullptr) throw Error(ErrorCode::MissingGroundTruth, "no scene ground truth available");
  const auto x = truth->displacement(src_frame, dst_frame);
  if (!x) {
    throw Error(ErrorCode::MissingGroundTruth, "no displacement for frames " + std::to_string(src_frame) + "->" +
                                                   std::to_string(dst_frame));
  }
  return oracle_mask(*x, epsilon);
}

MotionMask residual_mask(const VectorGrid& flow_residual, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::NonPositiveSigma, "residual mask sigma must be positive");
  MotionMask m(flow_residual.width(), flow_residual.height(), 1.0);
  for (std::size_t p = 0; p < flow_residual.size(); ++p) {
    const double s = flow_residual[p].norm() / sigma;
    m[p] = std::exp(-s * s);
  }
  return m;
}

MaskMetrics mask_metrics(const MotionMask& pred, const MotionMask& truth) {
  if (!pred.same_shape(truth)) throw Error(ErrorCode::ShapeMismatch, "mask shapes differ");
  MaskMetrics out;
  if (pred.empty()) return out;
  double bce = 0.0;
  std::size_t intersection = 0;
  std::size_t uni = 0;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    const double q = std::clamp(pred[p], kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double y = truth[p];
    bce -= y * std::log(q) + (1.0 - y) * std::log(1.0 - q);
    const bool pred_dynamic = pred[p] < 0.5;
    const bool truth_dynamic = truth[p] < 0.5;
    intersection += pred_dynamic && truth_dynamic;
    uni += pred_dynamic || truth_dynamic;
  }
  out.bce = bce / static_cast<double>(pred.size());
  out.iou = uni == 0 ? 1.0 : static_cast<double>(intersection) / static_cast<double>(uni);
  return out;
}

std::string_view to_string(MaskProviderKind kind) {
  switch (kind) {
    case MaskProviderKind::Oracle: return "oracle";
    case MaskProviderKind::Residual: return "residual";
    case MaskProviderKind::None: return "none";
  }
  return "none";
}

MaskProviderKind parse_mask_provider(std::string_view name) {
  if (name == "oracle") return MaskProviderKind::Oracle;
  if (name == "residual") return MaskProviderKind::Residual;
  if (name == "none") return MaskProviderKind::None;
  throw Error(ErrorCode::InvalidConfig, "unknown mask provider '" + std::string(name) + "'");
}

MotionMask OracleMaskProvider::mask(const EdgeContext& edge) const {
  return oracle_mask(edge.src_frame, edge.dst_frame, truth_, epsilon_);
}

ResidualMaskProvider::ResidualMaskProvider(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::NonPositiveSigma, "residual mask sigma must be positive");
}

MotionMask ResidualMaskProvider::mask(const EdgeContext& edge) const {
  const EdgeObservation& obs = require_observation(edge);
  if (edge.residual == nullptr) return MotionMask(obs.flow_pred.width(), obs.flow_pred.height(), 1.0);
  return residual_mask(*edge.residual, sigma_);
}

MotionMask UnitMaskProvider::mask(const EdgeContext& edge) const {
  const EdgeObservation& obs = require_observation(edge);
  return MotionMask(obs.flow_pred.width(), obs.flow_pred.height(), 1.0);
}

std::unique_ptr<MaskProvider> make_mask_provider(MaskProviderKind kind, const MotionTruth* truth, double epsilon,
                                                 double sigma) {
  switch (kind) {
    case MaskProviderKind::Oracle: return std::make_unique<OracleMaskProvider>(truth, epsilon);
    case MaskProviderKind::Residual: return std::make_unique<ResidualMaskProvider>(sigma);
    case MaskProviderKind::None: return std::make_unique<UnitMaskProvider>();
  }
  return std::make_unique<UnitMaskProvider>();
}

}  // namespace dynba
