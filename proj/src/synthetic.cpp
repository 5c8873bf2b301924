#include "ope/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include "ope/errors.hpp"
#include "ope/outcome_model.hpp"
#include "ope/parallel.hpp"
#include "ope/random.hpp"

namespace ope {

double SyntheticEnv::mean_outcome(std::span<const double> context, int treatment) const {
  const ArmOutcome& arm = arms.at(static_cast<std::size_t>(treatment));
  double score = arm.intercept;
  for (std::size_t j = 0; j < arm.linear.size(); ++j) score += arm.linear[j] * context[j];
  for (std::size_t j = 0; j < arm.quadratic.size(); ++j) {
    score += arm.quadratic[j] * context[j] * context[j];
  }
  return outcome_kind == OutcomeKind::binary ? sigmoid(score) : score;
}

void SyntheticEnv::check() const {
  if (d < 0) throw std::invalid_argument("environment dimension d must be >= 0");
  if (arms.empty()) throw std::invalid_argument("environment needs at least one treatment arm");
  for (std::size_t t = 0; t < arms.size(); ++t) {
    const auto& a = arms[t];
    if (std::ssize(a.linear) != d || (!a.quadratic.empty() && std::ssize(a.quadratic) != d)) {
      throw std::invalid_argument("arm " + std::to_string(t) +
                                  " coefficient vectors must have length d=" + std::to_string(d));
    }
  }
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("noise_sd must be >= 0");
}

namespace {

void draw_context(Rng& rng, std::vector<double>& x) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : x) v = normal(rng);
}

}  // namespace

GeneratedData generate(const SyntheticEnv& env, std::size_t n, const Policy& policy,
                       std::uint64_t seed) {
  env.check();
  if (n == 0) throw std::invalid_argument("generate needs n >= 1");
  if (policy.m() != env.m()) {
    throw std::invalid_argument("policy '" + policy.id() + "' has " + std::to_string(policy.m()) +
                                " treatments, environment has " + std::to_string(env.m()));
  }

  GeneratedData out;
  out.dataset.policy_id = policy.id();
  out.dataset.d = env.d;
  out.dataset.m = env.m();
  out.dataset.outcome_kind = env.outcome_kind;
  out.dataset.rows.reserve(n);
  out.records.reserve(n);

  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> probs(static_cast<std::size_t>(env.m()));

  for (std::size_t i = 0; i < n; ++i) {
    SyntheticRecord rec;
    rec.row.context.resize(static_cast<std::size_t>(env.d));
    draw_context(rng, rec.row.context);
    policy.distribution(rec.row.context, probs);
    rec.row.treatment = policy.sample(rec.row.context, rng);
    rec.row.logged_propensity = probs[static_cast<std::size_t>(rec.row.treatment)];

    rec.potential.resize(static_cast<std::size_t>(env.m()));
    for (int t = 0; t < env.m(); ++t) {
      const double mu = env.mean_outcome(rec.row.context, t);
      if (env.outcome_kind == OutcomeKind::binary) {
        rec.potential[static_cast<std::size_t>(t)] = unit(rng) < mu ? 1.0 : 0.0;
      } else {
        rec.potential[static_cast<std::size_t>(t)] = mu + env.noise_sd * noise(rng);
      }
    }
    rec.row.outcome = rec.potential[static_cast<std::size_t>(rec.row.treatment)];
    out.dataset.rows.push_back(rec.row);
    out.records.push_back(std::move(rec));
  }
  return out;
}

MonteCarloValue true_policy_value(const SyntheticEnv& env, const Policy& policy,
                                  std::size_t mc_n, std::uint64_t seed) {
  env.check();
  if (mc_n == 0) throw std::invalid_argument("true_policy_value needs mc_n >= 1");
  Rng rng(seed);
  std::vector<double> x(static_cast<std::size_t>(env.d));
  std::vector<double> probs(static_cast<std::size_t>(env.m()));
  // Welford: exact for constant values.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 1; i <= mc_n; ++i) {
    draw_context(rng, x);
    policy.distribution(x, probs);
    double v = 0.0;
    for (int t = 0; t < env.m(); ++t) {
      if (probs[static_cast<std::size_t>(t)] != 0.0) {
        v += probs[static_cast<std::size_t>(t)] * env.mean_outcome(x, t);
      }
    }
    const double delta = v - mean;
    mean += delta / static_cast<double>(i);
    m2 += delta * (v - mean);
  }
  MonteCarloValue out;
  out.value = mean;
  if (mc_n > 1) {
    const double var = m2 / static_cast<double>(mc_n - 1);
    out.standard_error = std::sqrt(var / static_cast<double>(mc_n));
  }
  return out;
}

OracleResult oracle_rmse(const SyntheticEnv& env, const DatasetEstimator& estimator,
                         const Policy& target, const Policy& behavior, std::size_t n,
                         std::size_t replications, std::uint64_t seed,
                         const OracleOptions& options) {
  if (replications < 2) throw std::invalid_argument("oracle_rmse needs replications >= 2");
  OracleResult out;
  if (options.truth) {
    out.truth = *options.truth;
  } else {
    const auto truth = true_policy_value(env, target, options.truth_samples,
                                         derive_seed(seed, 0xffffffffULL));
    out.truth = truth.value;
    out.truth_se = truth.standard_error;
  }
  out.replications = replications;
  out.estimates.assign(replications, 0.0);
  parallel_for(replications, options.threads, [&](std::size_t r) {
    const auto data = generate(env, n, behavior, derive_seed(seed, r));
    out.estimates[r] = estimator(data.dataset);
  });

  double sq = 0.0;
  for (double v : out.estimates) sq += (v - out.truth) * (v - out.truth);
  out.rmse = std::sqrt(sq / static_cast<double>(replications));
  out.mean_estimate = stable_mean(out.estimates);
  out.bias = out.mean_estimate - out.truth;
  double var = 0.0;
  for (double v : out.estimates) var += (v - out.mean_estimate) * (v - out.mean_estimate);
  out.sd = std::sqrt(var / static_cast<double>(replications - 1));
  return out;
}

OracleResult oracle_rmse(const SyntheticEnv& env, EstimatorId estimator,
                         const EstimationSettings& settings, const Policy& target,
                         const Policy& behavior, std::size_t n, std::size_t replications,
                         std::uint64_t seed, const OracleOptions& options) {
  const DatasetEstimator fn = [&](const LoggedDataset& data) {
    return estimate_value(estimator, data, target, settings).value;
  };
  return oracle_rmse(env, fn, target, behavior, n, replications, seed, options);
}

Scenario scenario_s1() {
  Scenario s;
  s.name = "s1";
  s.env.d = 2;
  s.env.outcome_kind = OutcomeKind::binary;
  s.env.arms = {
      ArmOutcome{-0.2, {0.6, -0.4}, {}},
      ArmOutcome{0.4, {-0.5, 0.5}, {}},
  };
  s.policy_a = PolicySpec{PolicySpec::Family::logistic, "A", 2, 0, {{0.0, 4.0, 0.0}}, 0.05};
  s.policy_b = PolicySpec{PolicySpec::Family::logistic, "B", 2, 0, {{0.0, -4.0, 0.0}}, 0.05};
  s.n_a = 500;
  s.n_b = 500;
  s.estimation.family = ModelFamily::logistic;
  s.estimation.lambda = kDefaultLambda;
  // Assignment probabilities are not logged in this scenario; IPW and DR
  // fall back to a fitted logistic propensity model.
  s.estimation.propensity = PropensityMode::estimated;
  return s;
}

Scenario scenario_s2() {
  Scenario s;
  s.name = "s2";
  s.env.d = 2;
  s.env.outcome_kind = OutcomeKind::continuous;
  s.env.arms = {
      ArmOutcome{20.0, {1.0, 0.5}, {2.0, 0.0}},
      ArmOutcome{21.0, {-1.0, 1.0}, {2.0, 0.0}},
  };
  s.env.noise_sd = 4.0;
  s.policy_a = PolicySpec{PolicySpec::Family::logistic, "A", 2, 0, {{0.0, 2.5, 0.0}}, 0.05};
  s.policy_b = PolicySpec{PolicySpec::Family::logistic, "B", 2, 0, {{0.0, -2.5, 0.0}}, 0.05};
  s.n_a = 2000;
  s.n_b = 2000;
  s.estimation.family = ModelFamily::ridge_linear;
  s.estimation.lambda = kDefaultLambda;
  s.estimation.propensity = PropensityMode::logged;
  return s;
}

Scenario scenario_by_name(const std::string& name) {
  if (name == "s1") return scenario_s1();
  if (name == "s2") return scenario_s2();
  throw ConfigError("unknown scenario '" + name + "' (expected s1 or s2)");
}

void check_scenario(const Scenario& s) {
  try {
    s.env.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("env: ") + e.what());
  }
  for (const PolicySpec* p : {&s.policy_a, &s.policy_b}) {
    using F = PolicySpec::Family;
    const bool bounded =
        (p->family == F::uniform && 1.0 / p->m >= kMinBehaviorFloor) ||
        ((p->family == F::softmax || p->family == F::logistic) && p->floor >= kMinBehaviorFloor);
    if (!bounded) {
      throw ConfigError("behavior policy '" + p->id +
                        "' must be stochastic with probabilities floored at >= 0.05");
    }
    if (p->m != s.env.m()) {
      throw ConfigError("behavior policy '" + p->id + "' treatment count differs from env");
    }
  }
  if (s.policy_a.id == s.policy_b.id) throw ConfigError("behavior policies need distinct ids");
  if (s.n_a == 0 || s.n_b == 0) throw ConfigError("scenario log sizes must be >= 1");
}

ScenarioData generate_scenario(const Scenario& scenario, std::uint64_t seed) {
  check_scenario(scenario);
  const Policy a = make_policy(scenario.policy_a);
  const Policy b = make_policy(scenario.policy_b);
  return ScenarioData{generate(scenario.env, scenario.n_a, a, derive_seed(seed, 0)),
                      generate(scenario.env, scenario.n_b, b, derive_seed(seed, 1))};
}

}  // namespace ope
