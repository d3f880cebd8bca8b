#include <algorithm>
#include <cmath>
#include <sstream>

#include "dynba/ba.hpp"
#include "dynba/error.hpp"

namespace dynba {

namespace {

constexpr double kDampingGrowth = 10.0;
// Floor used when growing from a zero configured damping.
constexpr double kMinGrownDamping = 1e-4;
constexpr int kBacktrackSteps = 4;

BAUpdate scaled(BAUpdate step, double alpha) {
  for (auto& t : step.poses) {
    t.rho *= alpha;
    t.phi *= alpha;
  }
  for (auto& d : step.disparities) d *= alpha;
  return step;
}

}  // namespace

BAResult ba_optimize(const BAProblem& problem, const SolverConfig& config) {
  problem.validate();
  config.validate();

  BAProblem state = problem;
  BAResult result;
  result.initial_cost = ba_cost(state, config);
  result.final_cost = result.initial_cost;
  if (!std::isfinite(result.initial_cost)) {
    throw Error(ErrorCode::NonFiniteCost, "initial cost is not finite");
  }

  SolverConfig step_config = config;
  double cost = result.initial_cost;
  for (int it = 0; it < config.gn_iterations; ++it) {
    const NormalEquations system = assemble_normal_equations(state, step_config);
    const BAUpdate step = schur_solve(system);
    BAProblem trial = state;
    apply_update(trial, step, system.fixed_poses);

    double trial_cost = ba_cost(trial, config);
    if (!std::isfinite(trial_cost) && !config.adaptive_damping) {
      std::ostringstream msg;
      msg << "cost became " << trial_cost << " at iteration " << it << " (previous " << cost << ", damping "
          << step_config.damping << ", step norm " << step.stacked().norm() << ")";
      throw Error(ErrorCode::NonFiniteCost, msg.str());
    }
    // Backtrack along the step before giving up on it.
    double alpha = 1.0;
    for (int b = 0; config.adaptive_damping && !(trial_cost <= cost) && b < kBacktrackSteps; ++b) {
      alpha *= 0.5;
      trial = state;
      apply_update(trial, scaled(step, alpha), system.fixed_poses);
      trial_cost = ba_cost(trial, config);
    }
    if (config.adaptive_damping && !(trial_cost <= cost)) {
      ++result.rejected_steps;
      step_config.damping = std::max(step_config.damping * kDampingGrowth, kMinGrownDamping);
    } else {
      state = std::move(trial);
      cost = trial_cost;
      if (config.adaptive_damping && alpha == 1.0) {
        step_config.damping = std::max(step_config.damping / kDampingGrowth, config.damping);
      }
    }
    result.per_iteration_costs.push_back(cost);
    result.final_cost = cost;
  }

  result.poses = std::move(state.poses);
  result.disparities = std::move(state.disparities);
  return result;
}

}  // namespace dynba
