#pragma once

#include <memory>
#include <optional>
#include <string_view>

#include "dynba/ba.hpp"
#include "dynba/flow.hpp"
#include "dynba/grid.hpp"

namespace dynba {

/// Per-edge motion map on the source frame's grid: 1 = static (kept), 0 = dynamic (suppressed).
using MotionMask = ScalarGrid;

inline constexpr double kDefaultOracleEpsilon = 0.01;
inline constexpr double kDefaultResidualSigma = 3.0;

/// Ground-truth object motion between two input frames, in frame-dst camera coordinates.
class MotionTruth {
 public:
  virtual ~MotionTruth() = default;
  virtual std::optional<DisplacementField> displacement(int src_frame, int dst_frame) const = 0;
};

/// Zero where the displacement exceeds epsilon, one elsewhere.
MotionMask oracle_mask(const DisplacementField& displacement, double epsilon = kDefaultOracleEpsilon);
/// Throws MissingGroundTruth when no displacement is known for the pair.
MotionMask oracle_mask(int src_frame, int dst_frame, const MotionTruth* truth,
                       double epsilon = kDefaultOracleEpsilon);

/// exp(-(|r| / sigma)^2) per pixel. Throws NonPositiveSigma.
MotionMask residual_mask(const VectorGrid& flow_residual, double sigma = kDefaultResidualSigma);

struct MaskMetrics {
  double bce = 0.0;
  double iou = 1.0;
};

/// Mean binary cross-entropy of pred against truth labels (pred clamped to [1e-7, 1-1e-7])
/// and IoU of the dynamic class after thresholding pred at 0.5.
MaskMetrics mask_metrics(const MotionMask& pred, const MotionMask& truth);

enum class MaskProviderKind { Oracle, Residual, None };

std::string_view to_string(MaskProviderKind kind);
MaskProviderKind parse_mask_provider(std::string_view name);

/// What a provider may look at when masking one edge.
struct EdgeContext {
  int src_frame = 0;
  int dst_frame = 0;
  const EdgeObservation* observation = nullptr;
  /// Residual of the observation under the current estimate, when available.
  const VectorGrid* residual = nullptr;
};

/// Deterministic, edge-dependent mask source.
class MaskProvider {
 public:
  virtual ~MaskProvider() = default;
  virtual MotionMask mask(const EdgeContext& edge) const = 0;
};

class OracleMaskProvider final : public MaskProvider {
 public:
  explicit OracleMaskProvider(const MotionTruth* truth, double epsilon = kDefaultOracleEpsilon)
      : truth_(truth), epsilon_(epsilon) {}
  MotionMask mask(const EdgeContext& edge) const override;

 private:
  const MotionTruth* truth_;
  double epsilon_;
};

class ResidualMaskProvider final : public MaskProvider {
 public:
  explicit ResidualMaskProvider(double sigma = kDefaultResidualSigma);
  MotionMask mask(const EdgeContext& edge) const override;

 private:
  double sigma_;
};

class UnitMaskProvider final : public MaskProvider {
 public:
  MotionMask mask(const EdgeContext& edge) const override;
};

std::unique_ptr<MaskProvider> make_mask_provider(MaskProviderKind kind, const MotionTruth* truth,
                                                 double epsilon = kDefaultOracleEpsilon,
                                                 double sigma = kDefaultResidualSigma);

}  // namespace dynba
