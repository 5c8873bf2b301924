#include "ope/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ope/cross_fit.hpp"
#include "ope/errors.hpp"
#include "ope/parallel.hpp"
#include "ope/random.hpp"

namespace ope {

std::string_view to_string(SubsampleMethod method) {
  return method == SubsampleMethod::split ? "split" : "bootstrap";
}

SubsampleMethod subsample_method_from_string(std::string_view name) {
  if (name == "bootstrap") return SubsampleMethod::bootstrap;
  if (name == "split") return SubsampleMethod::split;
  throw ConfigError("unknown subsample method '" + std::string(name) +
                    "' (expected bootstrap or split)");
}

std::string_view to_string(PropensityMode mode) {
  return mode == PropensityMode::estimated ? "estimated" : "logged";
}

PropensityMode propensity_mode_from_string(std::string_view name) {
  if (name == "logged") return PropensityMode::logged;
  if (name == "estimated") return PropensityMode::estimated;
  throw ConfigError("unknown propensity source '" + std::string(name) +
                    "' (expected logged or estimated)");
}

std::vector<std::vector<std::size_t>> subsample_indices(std::size_t n,
                                                        const SubsampleSpec& spec) {
  if (spec.k < 1) throw ConfigError("subsample count k must be >= 1");
  if (n == 0) throw EstimationError("cannot subsample an empty dataset");
  const auto k = static_cast<std::size_t>(spec.k);
  std::vector<std::vector<std::size_t>> out(k);

  if (spec.method == SubsampleMethod::bootstrap) {
    for (std::size_t j = 0; j < k; ++j) {
      Rng rng = make_rng(spec.seed, j);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      out[j].resize(n);
      for (auto& idx : out[j]) idx = pick(rng);
    }
    return out;
  }

  if (spec.split_fraction) {
    const double f = *spec.split_fraction;
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("split_fraction must lie in (0, 1]");
    const auto size = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(f * static_cast<double>(n) - 1e-9)));
    for (std::size_t j = 0; j < k; ++j) {
      Rng rng = make_rng(spec.seed, j);
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      for (std::size_t i = 0; i < size; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(perm[i], perm[pick(rng)]);
      }
      perm.resize(size);
      std::sort(perm.begin(), perm.end());
      out[j] = std::move(perm);
    }
    return out;
  }

  if (k > n) {
    throw EstimationError("split into k=" + std::to_string(k) + " blocks needs k <= n, got n=" +
                          std::to_string(n));
  }
  Rng rng = make_rng(spec.seed, 0);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t j = 0; j < k; ++j) {
    out[j].assign(perm.begin() + static_cast<std::ptrdiff_t>(j * n / k),
                  perm.begin() + static_cast<std::ptrdiff_t>((j + 1) * n / k));
    std::sort(out[j].begin(), out[j].end());
  }
  return out;
}

std::vector<LoggedDataset> make_subsamples(const LoggedDataset& dataset,
                                           const SubsampleSpec& spec) {
  std::vector<LoggedDataset> out;
  for (const auto& idx : subsample_indices(dataset.size(), spec)) out.push_back(dataset.select(idx));
  return out;
}

double relative_rmse(std::span<const double> estimates, double ground_truth) {
  if (estimates.empty()) throw EstimationError("relative RMSE needs at least one estimate");
  if (ground_truth == 0.0) {
    throw EstimationError("ground truth is zero; relative RMSE is undefined");
  }
  double sum = 0.0;
  for (double v : estimates) {
    const double rel = (v - ground_truth) / ground_truth;
    sum += rel * rel;
  }
  return std::sqrt(sum / static_cast<double>(estimates.size()));
}

namespace {

bool needs_outcome(EstimatorId id) { return id == EstimatorId::DM || id == EstimatorId::DR; }
bool needs_propensity(EstimatorId id) { return id == EstimatorId::IPW || id == EstimatorId::DR; }

// Fitted nuisance models for one dataset; a failed fit is kept as a message
// so that only the estimators depending on it fail.
struct Nuisances {
  std::optional<OutcomePredictions> outcome;
  std::string outcome_error;
  std::optional<PropensitySource> propensity;
  std::string propensity_error;

  Nuisances select(const std::vector<std::size_t>& rows) const {
    Nuisances out = *this;
    if (outcome) out.outcome = outcome->select(rows);
    return out;
  }
};

Nuisances build_nuisances(const LoggedDataset& data, const EstimationSettings& s,
                          bool outcome, bool propensity, std::uint64_t cross_fit_seed) {
  Nuisances nz;
  if (outcome) {
    try {
      if (s.cross_fit_folds > 0) {
        nz.outcome = cross_fit(data, s.cross_fit_folds, s.family, s.lambda, cross_fit_seed);
      } else {
        nz.outcome = predict_all(fit_outcome_model(data, s.family, s.lambda), data);
      }
    } catch (const std::exception& e) {
      nz.outcome_error = std::string("outcome model: ") + e.what();
    }
  }
  if (propensity) {
    if (s.propensity == PropensityMode::logged) {
      nz.propensity = PropensitySource::logged();
    } else {
      try {
        nz.propensity = PropensitySource::estimated(fit_propensity_model(data, s.clip_floor),
                                                    /*prefer_logged=*/false);
      } catch (const std::exception& e) {
        nz.propensity_error = std::string("propensity model: ") + e.what();
      }
    }
  }
  return nz;
}

PolicyValueEstimate apply(EstimatorId id, const LoggedDataset& data, const Policy& target,
                          const Nuisances& nz) {
  if (needs_outcome(id) && !nz.outcome) throw EstimationError(nz.outcome_error);
  if (needs_propensity(id) && !nz.propensity) throw EstimationError(nz.propensity_error);
  switch (id) {
    case EstimatorId::DM: return dm_estimate(data, target, *nz.outcome);
    case EstimatorId::IPW: return ipw_estimate(data, target, *nz.propensity);
    case EstimatorId::DR: return dr_estimate(data, target, *nz.outcome, *nz.propensity);
    case EstimatorId::OnPolicy: return on_policy_estimate(data);
  }
  throw EstimationError("unknown estimator");
}

DirectionReport evaluate_direction(const LoggedDataset& source, const Policy& target,
                                   double ground_truth, std::span<const EstimatorId> estimators,
                                   const SubsampleSpec& spec, const SelectionSettings& settings) {
  DirectionReport rep;
  rep.source_policy = source.policy_id;
  rep.target_policy = target.id();
  rep.label = "D_" + source.policy_id + " -> pi_" + target.id();
  rep.ground_truth = ground_truth;

  if (ground_truth == 0.0) {
    rep.defined = false;
    rep.error = "ground truth is zero; relative RMSE is undefined";
    for (auto id : estimators) rep.results.push_back({id, false, 0.0, 0.0, rep.error});
    return rep;
  }

  bool want_outcome = false;
  bool want_propensity = false;
  for (auto id : estimators) {
    want_outcome |= needs_outcome(id);
    want_propensity |= needs_propensity(id);
  }

  const auto indices = subsample_indices(source.size(), spec);
  const std::size_t k = indices.size();
  const EstimationSettings& est = settings.estimation;

  std::optional<Nuisances> shared;
  if (!settings.refit_per_subsample) {
    shared = build_nuisances(source, est, want_outcome, want_propensity, est.cross_fit_seed);
  }

  std::vector<std::vector<double>> values(estimators.size(), std::vector<double>(k, 0.0));
  std::vector<std::vector<std::string>> errors(estimators.size(), std::vector<std::string>(k));

  parallel_for(k, settings.threads, [&](std::size_t j) {
    const LoggedDataset sub = source.select(indices[j]);
    const Nuisances nz =
        shared ? shared->select(indices[j])
               : build_nuisances(sub, est, want_outcome, want_propensity,
                                 derive_seed(est.cross_fit_seed, j));
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      try {
        values[e][j] = apply(estimators[e], sub, target, nz).value;
      } catch (const std::exception& ex) {
        errors[e][j] = ex.what();
      }
    }
  });

  for (std::size_t e = 0; e < estimators.size(); ++e) {
    EstimatorResult res;
    res.estimator = estimators[e];
    for (std::size_t j = 0; j < k; ++j) {
      if (!errors[e][j].empty()) {
        res.error = "subsample " + std::to_string(j) + ": " + errors[e][j];
        break;
      }
    }
    if (res.error.empty()) {
      res.ok = true;
      res.rrmse = relative_rmse(values[e], ground_truth);
      res.mean_estimate = stable_mean(values[e]);
    }
    rep.results.push_back(std::move(res));
  }
  rep.best = select_best(rep.results);
  return rep;
}

}  // namespace

PolicyValueEstimate estimate_value(EstimatorId id, const LoggedDataset& data,
                                   const Policy& target, const EstimationSettings& settings) {
  const Nuisances nz = build_nuisances(data, settings, needs_outcome(id), needs_propensity(id),
                                       settings.cross_fit_seed);
  return apply(id, data, target, nz);
}

std::optional<EstimatorId> select_best(std::span<const EstimatorResult> results) {
  std::optional<EstimatorId> best;
  double best_score = 0.0;
  for (const auto& r : results) {
    if (!r.ok) continue;
    if (!best || r.rrmse < best_score ||
        (r.rrmse == best_score && static_cast<int>(r.estimator) < static_cast<int>(*best))) {
      best = r.estimator;
      best_score = r.rrmse;
    }
  }
  return best;
}

SelectionReport run_selection(const LoggedDataset& d_a, const LoggedDataset& d_b,
                              const Policy& pi_a, const Policy& pi_b,
                              std::span<const EstimatorId> estimators,
                              const SubsampleSpec& spec, const SelectionSettings& settings) {
  if (d_a.empty() || d_b.empty()) throw DataError("both logged datasets must be non-empty");
  if (d_a.policy_id != pi_a.id()) {
    throw DataError("dataset A was logged by '" + d_a.policy_id + "', not by policy '" +
                    pi_a.id() + "'");
  }
  if (d_b.policy_id != pi_b.id()) {
    throw DataError("dataset B was logged by '" + d_b.policy_id + "', not by policy '" +
                    pi_b.id() + "'");
  }
  if (pi_a.id() == pi_b.id()) throw DataError("the two behavior policies need distinct ids");
  if (d_a.d != d_b.d || d_a.m != d_b.m) {
    throw DataError("datasets A and B disagree on context dimension or treatment count");
  }
  if (estimators.empty()) throw ConfigError("estimator list is empty");
  for (auto id : estimators) {
    if (id == EstimatorId::OnPolicy) {
      throw ConfigError("OnPolicy is the ground truth, not a candidate estimator");
    }
  }

  SelectionReport report;
  report.k = spec.k;
  report.seed = spec.seed;
  report.ground_truth_a = on_policy_estimate(d_a).value;
  report.ground_truth_b = on_policy_estimate(d_b).value;
  report.directions[0] =
      evaluate_direction(d_a, pi_b, report.ground_truth_b, estimators, spec, settings);
  report.directions[1] =
      evaluate_direction(d_b, pi_a, report.ground_truth_a, estimators, spec, settings);
  return report;
}

}  // namespace ope
