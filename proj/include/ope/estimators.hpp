#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "ope/dataset.hpp"
#include "ope/outcome_model.hpp"
#include "ope/policy.hpp"
#include "ope/propensity.hpp"

namespace ope {

// Declaration order is the tie-break order used by estimator selection.
enum class EstimatorId { DM, IPW, DR, OnPolicy };

std::string_view to_string(EstimatorId id);
EstimatorId estimator_from_string(std::string_view name);

struct PolicyValueEstimate {
  double value = 0.0;
  EstimatorId estimator = EstimatorId::OnPolicy;
  std::size_t n = 0;
  std::string target_policy_id;
  std::string data_policy_id;
};

/// Running mean, exact for constant inputs. All estimators average through
/// this so that algebraically equal per-row terms give bit-equal results.
double stable_mean(std::span<const double> values);

/// Mean logged outcome: the value of the policy that collected the data.
PolicyValueEstimate on_policy_estimate(const LoggedDataset& dataset);

/// Direct Method: mean over rows of sum_t pi(t|x_i) mu(x_i, t).
PolicyValueEstimate dm_estimate(const LoggedDataset& dataset, const Policy& policy,
                                const OutcomeModel& model);
PolicyValueEstimate dm_estimate(const LoggedDataset& dataset, const Policy& policy,
                                const OutcomePredictions& predictions);

/// Inverse Probability Weighting: mean of pi(t_i|x_i) / p(t_i|x_i) * y_i.
/// Unclipped; may leave the outcome range. Returns 0 when the policy never
/// agrees with a logged treatment.
PolicyValueEstimate ipw_estimate(const LoggedDataset& dataset, const Policy& policy,
                                 const PropensitySource& propensities);

/// Doubly Robust: DM term plus the importance-weighted residual
/// pi(t_i|x_i) / p(t_i|x_i) * (y_i - mu(x_i, t_i)).
PolicyValueEstimate dr_estimate(const LoggedDataset& dataset, const Policy& policy,
                                const OutcomeModel& model,
                                const PropensitySource& propensities);
PolicyValueEstimate dr_estimate(const LoggedDataset& dataset, const Policy& policy,
                                const OutcomePredictions& predictions,
                                const PropensitySource& propensities);

}  // namespace ope
