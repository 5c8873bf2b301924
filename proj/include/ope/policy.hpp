#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ope/random.hpp"

namespace ope {

/// Parametric description of a policy, serializable in run configs.
///
/// Scores are affine in the context: score_t(x) = w_t[0] + sum_j w_t[j+1] x_j.
///   constant  - always `treatment` (deterministic)
///   uniform   - 1/m for every treatment (stochastic)
///   argmax    - highest score, lowest index on ties (deterministic)
///   threshold - binary; treatment 1 iff w . [1, x] > 0 (deterministic)
///   softmax   - floor + (1 - m * floor) * softmax(scores) (stochastic)
///   logistic  - binary softmax with w_0 = 0 and w_1 = w (stochastic)
struct PolicySpec {
  enum class Family { constant, uniform, argmax, threshold, softmax, logistic };

  Family family = Family::uniform;
  std::string id;
  int m = 2;
  int treatment = 0;
  // argmax/softmax: m rows of d+1; threshold/logistic: one row of d+1.
  std::vector<std::vector<double>> weights;
  double floor = 0.0;
};

std::string_view to_string(PolicySpec::Family family);
PolicySpec::Family policy_family_from_string(std::string_view name);

/// A decision rule over contexts. Deterministic policies map each context to
/// one treatment; stochastic policies assign a distribution over {0..m-1}.
/// Immutable and safe to share between threads.
class Policy {
 public:
  enum class Kind { deterministic, stochastic };

  using DecideFn = std::function<int(std::span<const double>)>;
  // Writes m probabilities for the context into the output span.
  using DistributionFn = std::function<void(std::span<const double>, std::span<double>)>;

  static Policy deterministic(std::string id, int m, DecideFn decide);
  static Policy stochastic(std::string id, int m, DistributionFn distribution);
  static Policy uniform(std::string id, int m = 2);
  static Policy constant(std::string id, int treatment, int m = 2);

  Kind kind() const { return kind_; }
  const std::string& id() const { return id_; }
  int m() const { return m_; }

  /// Probability of `treatment` under the policy; exactly 0 or 1 for
  /// deterministic policies. Throws std::out_of_range for a bad index.
  double prob(std::span<const double> context, int treatment) const;
  /// All m probabilities for the context.
  void distribution(std::span<const double> context, std::span<double> out) const;
  std::vector<double> distribution(std::span<const double> context) const;
  int decide(std::span<const double> context) const;
  int sample(std::span<const double> context, Rng& rng) const;

 private:
  Policy(Kind kind, std::string id, int m, DecideFn decide, DistributionFn dist);

  Kind kind_;
  std::string id_;
  int m_;
  DecideFn decide_;
  DistributionFn distribution_;
};

/// Builds the policy a spec describes. Throws std::invalid_argument on
/// inconsistent specs (wrong weight shapes, floor too large, ...).
Policy make_policy(const PolicySpec& spec);

}  // namespace ope
