#pragma once

#include <cstdint>
#include <vector>

#include "ope/dataset.hpp"
#include "ope/outcome_model.hpp"

namespace ope {

/// Fold index for each row: a seeded permutation cut into `folds` blocks
/// whose sizes differ by at most one.
std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed);

/// Out-of-fold outcome predictions: row i's predictions come from a model
/// fit on every fold except the one containing i. Throws EstimationError
/// naming the fold and arm when a training complement lacks a treatment.
OutcomePredictions cross_fit(const LoggedDataset& dataset, int folds, ModelFamily family,
                             double lambda, std::uint64_t seed);

}  // namespace ope
