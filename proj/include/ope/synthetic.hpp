#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ope/dataset.hpp"
#include "ope/estimators.hpp"
#include "ope/policy.hpp"
#include "ope/selection.hpp"

namespace ope {

/// Per-treatment mean outcome: intercept + linear . x + quadratic . x^2
/// (continuous), or the sigmoid of that score (binary).
struct ArmOutcome {
  double intercept = 0.0;
  std::vector<double> linear;
  std::vector<double> quadratic;  // empty means all zero
};

/// Fully specified data-generating process: contexts ~ N(0, I_d), potential
/// outcomes drawn independently per treatment around their arm's mean
/// (Gaussian noise for continuous outcomes, Bernoulli for binary ones).
struct SyntheticEnv {
  int d = 1;
  OutcomeKind outcome_kind = OutcomeKind::continuous;
  std::vector<ArmOutcome> arms;  // one per treatment
  double noise_sd = 0.0;

  int m() const { return static_cast<int>(arms.size()); }
  /// True mean outcome mu(x, t).
  double mean_outcome(std::span<const double> context, int treatment) const;
  /// Throws std::invalid_argument on inconsistent shapes.
  void check() const;
};

/// A logged row together with every potential outcome; only the synthetic
/// generator can produce these.
struct SyntheticRecord {
  Row row;
  std::vector<double> potential;  // potential[t] = Y(t)

  double y0() const { return potential.at(0); }
  double y1() const { return potential.at(1); }
};

struct GeneratedData {
  LoggedDataset dataset;  // potential outcomes hidden
  std::vector<SyntheticRecord> records;
};

/// n i.i.d. rows under `policy`, with the exact policy probability of the
/// assigned treatment stored as the logged propensity.
GeneratedData generate(const SyntheticEnv& env, std::size_t n, const Policy& policy,
                       std::uint64_t seed);

struct MonteCarloValue {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Monte Carlo mean of sum_t pi(t|x) mu(x, t) over mc_n fresh contexts.
MonteCarloValue true_policy_value(const SyntheticEnv& env, const Policy& policy,
                                  std::size_t mc_n, std::uint64_t seed);

inline constexpr std::size_t kDefaultTruthSamples = 1'000'000;

struct OracleResult {
  double rmse = 0.0;
  double bias = 0.0;           // mean estimate - truth
  double sd = 0.0;             // spread of the estimates
  double mean_estimate = 0.0;
  double truth = 0.0;
  double truth_se = 0.0;
  std::size_t replications = 0;
  std::vector<double> estimates;
};

struct OracleOptions {
  std::size_t truth_samples = kDefaultTruthSamples;
  unsigned threads = 1;
  // Uses this value (with zero SE) instead of a Monte Carlo truth when set.
  std::optional<double> truth;
};

using DatasetEstimator = std::function<double(const LoggedDataset&)>;

/// Brute-force accuracy of an estimator: draws `replications` fresh datasets
/// of n rows under the behavior policy, estimates the target policy's value
/// on each, and returns the RMSE against true_policy_value.
OracleResult oracle_rmse(const SyntheticEnv& env, const DatasetEstimator& estimator,
                         const Policy& target, const Policy& behavior, std::size_t n,
                         std::size_t replications, std::uint64_t seed,
                         const OracleOptions& options = {});
OracleResult oracle_rmse(const SyntheticEnv& env, EstimatorId estimator,
                         const EstimationSettings& settings, const Policy& target,
                         const Policy& behavior, std::size_t n, std::size_t replications,
                         std::uint64_t seed, const OracleOptions& options = {});

/// Canned two-policy experiment: environment, both behavior policies, log
/// sizes and the nuisance-model settings the selection run should use.
struct Scenario {
  std::string name;
  SyntheticEnv env;
  PolicySpec policy_a;
  PolicySpec policy_b;
  std::size_t n_a = 1000;
  std::size_t n_b = 1000;
  EstimationSettings estimation;
};

inline constexpr double kMinBehaviorFloor = 0.05;

/// Binary outcome, logistic outcome model matching the truth, small logs.
Scenario scenario_s1();
/// Continuous heavy-noise outcome with quadratic truth and a linear model.
Scenario scenario_s2();
/// "s1" or "s2"; throws ConfigError otherwise.
Scenario scenario_by_name(const std::string& name);

/// Throws ConfigError when a behavior policy is not stochastic with
/// probabilities bounded away from 0 and 1 by kMinBehaviorFloor.
void check_scenario(const Scenario& scenario);

/// Both logs of a scenario; A under policy_a with derive_seed(seed, 0), B
/// under policy_b with derive_seed(seed, 1).
struct ScenarioData {
  GeneratedData a;
  GeneratedData b;
};
ScenarioData generate_scenario(const Scenario& scenario, std::uint64_t seed);

}  // namespace ope
