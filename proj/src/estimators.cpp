#include "ope/estimators.hpp"

#include <cmath>
#include <vector>

#include "ope/errors.hpp"

namespace ope {

std::string_view to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::DM: return "DM";
    case EstimatorId::IPW: return "IPW";
    case EstimatorId::DR: return "DR";
    case EstimatorId::OnPolicy: return "OnPolicy";
  }
  return "?";
}

EstimatorId estimator_from_string(std::string_view name) {
  for (auto id : {EstimatorId::DM, EstimatorId::IPW, EstimatorId::DR, EstimatorId::OnPolicy}) {
    if (to_string(id) == name) return id;
  }
  throw ConfigError("unknown estimator '" + std::string(name) + "' (expected DM, IPW or DR)");
}

double stable_mean(std::span<const double> values) {
  double mean = 0.0;
  std::size_t k = 0;
  for (double v : values) {
    ++k;
    mean += (v - mean) / static_cast<double>(k);
  }
  return mean;
}

namespace {

void require_rows(const LoggedDataset& dataset) {
  if (dataset.empty()) throw EstimationError("dataset '" + dataset.policy_id + "' is empty");
}

PolicyValueEstimate finish(const std::vector<double>& terms, EstimatorId id,
                           const LoggedDataset& dataset, const std::string& target) {
  PolicyValueEstimate est;
  est.value = stable_mean(terms);
  if (!std::isfinite(est.value)) {
    throw EstimationError(std::string(to_string(id)) + " estimate is not finite");
  }
  est.estimator = id;
  est.n = dataset.size();
  est.target_policy_id = target;
  est.data_policy_id = dataset.policy_id;
  return est;
}

void check_predictions(const LoggedDataset& dataset, const OutcomePredictions& predictions) {
  if (predictions.values.rows() != std::ssize(dataset.rows) ||
      predictions.values.cols() != dataset.m) {
    throw EstimationError("outcome predictions do not match the dataset shape");
  }
}

// sum_t pi(t|x) mu(x,t); arms the policy never selects are not consulted.
double direct_term(const OutcomePredictions& predictions, std::size_t i,
                   std::span<const double> probs) {
  double total = 0.0;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    if (probs[t] == 0.0) continue;
    if (!predictions.has_arm(static_cast<int>(t))) {
      throw EstimationError("outcome model is missing arm " + std::to_string(t) +
                            ", which the target policy selects");
    }
    total += probs[t] * predictions.values(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(t));
  }
  return total;
}

double importance_weight(const Row& row, std::span<const double> probs,
                         const PropensitySource& propensities) {
  const double target = probs[static_cast<std::size_t>(row.treatment)];
  return target / propensities(row);
}

void check_policy(const LoggedDataset& dataset, const Policy& policy) {
  if (policy.m() != dataset.m) {
    throw EstimationError("policy '" + policy.id() + "' has " + std::to_string(policy.m()) +
                          " treatments but dataset has " + std::to_string(dataset.m));
  }
}

}  // namespace

PolicyValueEstimate on_policy_estimate(const LoggedDataset& dataset) {
  require_rows(dataset);
  std::vector<double> terms;
  terms.reserve(dataset.size());
  for (const auto& r : dataset.rows) terms.push_back(r.outcome);
  return finish(terms, EstimatorId::OnPolicy, dataset, dataset.policy_id);
}

PolicyValueEstimate dm_estimate(const LoggedDataset& dataset, const Policy& policy,
                                const OutcomePredictions& predictions) {
  require_rows(dataset);
  check_policy(dataset, policy);
  check_predictions(dataset, predictions);
  std::vector<double> terms(dataset.size());
  std::vector<double> probs(static_cast<std::size_t>(dataset.m));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    policy.distribution(dataset.rows[i].context, probs);
    terms[i] = direct_term(predictions, i, probs);
  }
  return finish(terms, EstimatorId::DM, dataset, policy.id());
}

PolicyValueEstimate dm_estimate(const LoggedDataset& dataset, const Policy& policy,
                                const OutcomeModel& model) {
  return dm_estimate(dataset, policy, predict_all(model, dataset));
}

PolicyValueEstimate ipw_estimate(const LoggedDataset& dataset, const Policy& policy,
                                 const PropensitySource& propensities) {
  require_rows(dataset);
  check_policy(dataset, policy);
  std::vector<double> terms(dataset.size());
  std::vector<double> probs(static_cast<std::size_t>(dataset.m));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Row& r = dataset.rows[i];
    policy.distribution(r.context, probs);
    terms[i] = importance_weight(r, probs, propensities) * r.outcome;
  }
  return finish(terms, EstimatorId::IPW, dataset, policy.id());
}

PolicyValueEstimate dr_estimate(const LoggedDataset& dataset, const Policy& policy,
                                const OutcomePredictions& predictions,
                                const PropensitySource& propensities) {
  require_rows(dataset);
  check_policy(dataset, policy);
  check_predictions(dataset, predictions);
  std::vector<double> terms(dataset.size());
  std::vector<double> probs(static_cast<std::size_t>(dataset.m));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Row& r = dataset.rows[i];
    policy.distribution(r.context, probs);
    const double direct = direct_term(predictions, i, probs);
    const double w = importance_weight(r, probs, propensities);
    if (w == 0.0) {
      terms[i] = direct;
      continue;
    }
    if (!predictions.has_arm(r.treatment)) {
      throw EstimationError("outcome model is missing arm " + std::to_string(r.treatment) +
                            ", needed for the residual correction");
    }
    const double mu = predictions.values(static_cast<Eigen::Index>(i), r.treatment);
    terms[i] = direct + w * (r.outcome - mu);
  }
  return finish(terms, EstimatorId::DR, dataset, policy.id());
}

PolicyValueEstimate dr_estimate(const LoggedDataset& dataset, const Policy& policy,
                                const OutcomeModel& model,
                                const PropensitySource& propensities) {
  return dr_estimate(dataset, policy, predict_all(model, dataset), propensities);
}

}  // namespace ope
