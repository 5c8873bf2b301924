#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ope/dataset.hpp"

namespace ope {

enum class ModelFamily { ridge_linear, logistic };

std::string_view to_string(ModelFamily family);
ModelFamily model_family_from_string(std::string_view name);

inline constexpr double kDefaultLambda = 1e-6;

/// Design matrix with a leading intercept column: row i is [1, x_i].
Eigen::MatrixXd design_matrix(const LoggedDataset& dataset,
                              const std::vector<std::size_t>& rows);
Eigen::MatrixXd design_matrix(const LoggedDataset& dataset);

// Ridge: minimizes ||y - Xw||^2 + lambda * ||w[1:]||^2 (intercept unpenalized).

/// Exact solution of (X'X + lambda D) w = X'y, D = diag(0, 1, ..., 1).
/// Throws EstimationError when the system is singular.
Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            double lambda);
/// (X'X + lambda D) w - X'y.
Eigen::VectorXd ridge_normal_residual(const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& w, double lambda);

// Logistic: minimizes the negative log-likelihood
//   sum_i softplus(z_i) - y_i z_i  + (lambda / 2) ||w[1:]||^2,  z = Xw.

double logistic_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& w, double lambda);
Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& w, double lambda);

struct NewtonOptions {
  double gradient_tolerance = 1e-8;  // max-norm
  int max_iterations = 500;
};

struct LogisticFit {
  Eigen::VectorXd weights;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
};

/// Newton's method with step halving on logistic_loss.
LogisticFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         double lambda, const NewtonOptions& options = {});

double sigmoid(double z);

/// Fitted regressor mu(x, t) with one affine weight vector per treatment
/// (separate regressions per arm). Arms may be absent; predicting for an
/// absent arm throws EstimationError.
class OutcomeModel {
 public:
  OutcomeModel(ModelFamily family, double lambda, int d,
               std::vector<std::optional<Eigen::VectorXd>> arm_weights);

  ModelFamily family() const { return family_; }
  double lambda() const { return lambda_; }
  int d() const { return d_; }
  int m() const { return static_cast<int>(arms_.size()); }
  bool has_arm(int t) const;
  const Eigen::VectorXd& weights(int t) const;

  /// Affine value (ridge) or sigmoid of it (logistic, clamped into (0,1)).
  double predict(std::span<const double> context, int treatment) const;

 private:
  ModelFamily family_;
  double lambda_;
  int d_;
  std::vector<std::optional<Eigen::VectorXd>> arms_;
};

enum class ArmCoverage {
  require_all,    // every treatment in {0..m-1} must have rows
  observed_only,  // arms without rows are left unfitted
};

struct OutcomeFitOptions {
  ArmCoverage coverage = ArmCoverage::require_all;
  NewtonOptions newton;
};

/// Fits one regression per treatment arm on the rows that received it.
OutcomeModel fit_outcome_model(const LoggedDataset& dataset, ModelFamily family,
                               double lambda, const OutcomeFitOptions& options = {});

/// mu-hat evaluated at every (row, treatment) pair of a dataset. Columns for
/// arms the producing model never fitted are marked unavailable.
struct OutcomePredictions {
  Eigen::MatrixXd values;  // n x m
  std::vector<bool> available;

  bool has_arm(int t) const { return t >= 0 && t < std::ssize(available) && available[t]; }
  OutcomePredictions select(const std::vector<std::size_t>& rows) const;
};

OutcomePredictions predict_all(const OutcomeModel& model, const LoggedDataset& dataset);

}  // namespace ope
