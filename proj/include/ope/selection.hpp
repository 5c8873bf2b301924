#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ope/dataset.hpp"
#include "ope/estimators.hpp"
#include "ope/outcome_model.hpp"
#include "ope/policy.hpp"
#include "ope/propensity.hpp"

namespace ope {

enum class SubsampleMethod { bootstrap, split };

std::string_view to_string(SubsampleMethod method);
SubsampleMethod subsample_method_from_string(std::string_view name);

inline constexpr int kDefaultSubsamples = 100;

/// Resampling plan producing K subsamples of a logged dataset.
///
/// bootstrap: K with-replacement resamples of size n.
/// split without split_fraction: one seeded permutation cut into K disjoint
///   blocks of near-equal size.
/// split with split_fraction f: K independent without-replacement draws of
///   ceil(f * n) rows.
struct SubsampleSpec {
  SubsampleMethod method = SubsampleMethod::bootstrap;
  int k = kDefaultSubsamples;
  std::uint64_t seed = 0;
  std::optional<double> split_fraction;
};

/// Row indices of each subsample. Bootstrap and fractional-split subsample j
/// depends only on (seed, j); split blocks share one seeded permutation.
std::vector<std::vector<std::size_t>> subsample_indices(std::size_t n, const SubsampleSpec& spec);
std::vector<LoggedDataset> make_subsamples(const LoggedDataset& dataset, const SubsampleSpec& spec);

/// sqrt(mean_k ((estimate_k - truth) / truth)^2). Throws EstimationError for
/// a zero ground truth or an empty estimate list.
double relative_rmse(std::span<const double> estimates, double ground_truth);

enum class PropensityMode { logged, estimated };

std::string_view to_string(PropensityMode mode);
PropensityMode propensity_mode_from_string(std::string_view name);

/// How nuisance models are built for DM/IPW/DR.
struct EstimationSettings {
  ModelFamily family = ModelFamily::ridge_linear;
  double lambda = kDefaultLambda;
  PropensityMode propensity = PropensityMode::logged;
  double clip_floor = kDefaultClipFloor;
  int cross_fit_folds = 0;  // 0 = off
  std::uint64_t cross_fit_seed = 0;
};

/// Evaluates the target policy's value on `data` with one estimator, fitting
/// whatever models that estimator needs on `data` itself.
PolicyValueEstimate estimate_value(EstimatorId id, const LoggedDataset& data,
                                   const Policy& target, const EstimationSettings& settings);

struct SelectionSettings {
  EstimationSettings estimation;
  bool refit_per_subsample = true;
  unsigned threads = 1;
};

struct EstimatorResult {
  EstimatorId estimator = EstimatorId::DM;
  bool ok = false;
  double rrmse = 0.0;
  double mean_estimate = 0.0;  // over subsamples
  std::string error;           // set when !ok
};

struct DirectionReport {
  std::string source_policy;  // policy that logged the data used
  std::string target_policy;  // policy being evaluated
  std::string label;          // "D_A -> pi_B"
  double ground_truth = 0.0;  // on-policy estimate of the target's own log
  bool defined = true;        // false when the ground truth is zero
  std::string error;          // why the direction is undefined
  std::vector<EstimatorResult> results;
  std::optional<EstimatorId> best;
};

struct SelectionReport {
  std::array<DirectionReport, 2> directions;  // D_A -> pi_B, D_B -> pi_A
  double ground_truth_a = 0.0;
  double ground_truth_b = 0.0;
  int k = 0;
  std::uint64_t seed = 0;
};

/// Lowest-RRMSE successful estimator; ties go to the earlier of DM, IPW, DR.
std::optional<EstimatorId> select_best(std::span<const EstimatorResult> results);

/// Cross-evaluates each estimator in both directions: the value of pi_b from
/// subsamples of d_a and of pi_a from subsamples of d_b, each scored by
/// relative RMSE against the other log's on-policy mean.
SelectionReport run_selection(const LoggedDataset& d_a, const LoggedDataset& d_b,
                              const Policy& pi_a, const Policy& pi_b,
                              std::span<const EstimatorId> estimators,
                              const SubsampleSpec& spec, const SelectionSettings& settings);

}  // namespace ope
