#include <cmath>
#include <string>

#include "dynba/error.hpp"
#include "dynba/eval.hpp"

namespace dynba {

void LossWeights::validate() const {
  if (!(w_cam >= 0.0 && w_flow >= 0.0 && w_res >= 0.0 && w_mask >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "loss weights must be non-negative");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::InvalidConfig, "gamma must lie in (0, 1]");
}

std::vector<double> temporal_weights(int steps, double gamma) {
  std::vector<double> w(static_cast<std::size_t>(std::max(steps, 0)));
  for (int k = 1; k <= steps; ++k) w[k - 1] = std::pow(gamma, steps - k);
  return w;
}

LossReport flow_and_residual_losses(const std::vector<FlowField>& induced, const std::vector<FlowField>& predicted,
                                    const FlowField& gt_flow, const LossWeights& weights) {
  weights.validate();
  if (induced.size() != predicted.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(induced.size()) + " induced vs " +
                                               std::to_string(predicted.size()) + " predicted steps");
  }
  LossReport r;
  r.step_weights = temporal_weights(static_cast<int>(induced.size()), weights.gamma);
  for (std::size_t k = 0; k < induced.size(); ++k) {
    const FlowField& f = induced[k];
    const FlowField& p = predicted[k];
    if (!f.vectors.same_shape(gt_flow.vectors) || !p.vectors.same_shape(gt_flow.vectors)) {
      throw Error(ErrorCode::ShapeMismatch, "flow series grids differ");
    }
    double flow_sum = 0.0;
    double res_sum = 0.0;
    std::size_t flow_n = 0;
    std::size_t res_n = 0;
    for (std::size_t i = 0; i < f.vectors.size(); ++i) {
      if (!f.is_valid(i)) continue;
      if (gt_flow.is_valid(i)) {
        flow_sum += (gt_flow.vectors[i] - f.vectors[i]).norm();
        ++flow_n;
      }
      if (p.is_valid(i)) {
        res_sum += (f.vectors[i] - p.vectors[i]).lpNorm<1>();
        ++res_n;
      }
    }
    r.per_step_flow.push_back(flow_n ? flow_sum / static_cast<double>(flow_n) : 0.0);
    r.per_step_residual.push_back(res_n ? res_sum / static_cast<double>(res_n) : 0.0);
    r.flow_total += r.step_weights[k] * r.per_step_flow.back();
    r.residual_total += r.step_weights[k] * r.per_step_residual.back();
  }
  r.total = weights.w_flow * r.flow_total + weights.w_res * r.residual_total;
  return r;
}

double operator_loss(double cam, double flow, double res, const LossWeights& weights) {
  return weights.w_cam * cam + weights.w_flow * flow + weights.w_res * res;
}

double mask_stage_loss(double cam, double bce, const LossWeights& weights) {
  return weights.w_cam * cam + weights.w_mask * bce;
}

}  // namespace dynba
