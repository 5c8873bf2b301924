#include "ope/cross_fit.hpp"

#include <algorithm>
#include <numeric>

#include "ope/errors.hpp"
#include "ope/random.hpp"

namespace ope {

std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2) throw EstimationError("cross-fitting needs at least 2 folds");
  if (static_cast<std::size_t>(folds) > n) {
    throw EstimationError("cross-fitting with " + std::to_string(folds) +
                          " folds needs at least as many rows, got " + std::to_string(n));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(seed, 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<int> fold(n);
  const std::size_t k = static_cast<std::size_t>(folds);
  for (std::size_t pos = 0; pos < n; ++pos) {
    // Block partition: first n % k blocks get one extra row.
    fold[perm[pos]] = static_cast<int>(pos * k / n);
  }
  return fold;
}

OutcomePredictions cross_fit(const LoggedDataset& dataset, int folds, ModelFamily family,
                             double lambda, std::uint64_t seed) {
  const auto fold = fold_assignment(dataset.size(), folds, seed);

  OutcomePredictions out;
  out.values.resize(static_cast<Eigen::Index>(dataset.size()), dataset.m);
  out.available.assign(static_cast<std::size_t>(dataset.m), true);

  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, held_out;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      (fold[i] == f ? held_out : train).push_back(i);
    }
    const LoggedDataset train_set = dataset.select(train);
    std::vector<bool> seen(static_cast<std::size_t>(dataset.m), false);
    for (const auto& r : train_set.rows) seen[static_cast<std::size_t>(r.treatment)] = true;
    for (int t = 0; t < dataset.m; ++t) {
      if (!seen[static_cast<std::size_t>(t)]) {
        throw EstimationError("cross-fit fold " + std::to_string(f) +
                              ": training folds contain no rows for treatment arm " +
                              std::to_string(t));
      }
    }
    const OutcomeModel model = fit_outcome_model(train_set, family, lambda);
    for (auto i : held_out) {
      for (int t = 0; t < dataset.m; ++t) {
        out.values(static_cast<Eigen::Index>(i), t) = model.predict(dataset.rows[i].context, t);
      }
    }
  }
  return out;
}

}  // namespace ope
