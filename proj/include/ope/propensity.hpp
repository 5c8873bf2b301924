#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ope/dataset.hpp"
#include "ope/outcome_model.hpp"

namespace ope {

inline constexpr double kDefaultClipFloor = 0.01;
// Ridge penalty on non-intercept propensity weights; keeps separable or
// collinear treatment assignments well posed.
inline constexpr double kPropensityLambda = 1e-6;

/// Estimated behavior policy p(t | x): logistic for two treatments, softmax
/// regression with treatment 0 as the reference class otherwise.
class PropensityModel {
 public:
  enum class Family { logistic, multinomial };

  /// `weights` has m-1 rows of length d+1; row k scores treatment k+1.
  PropensityModel(Eigen::MatrixXd weights, int m, double clip_floor);

  Family family() const { return m_ == 2 ? Family::logistic : Family::multinomial; }
  int m() const { return m_; }
  int d() const { return static_cast<int>(weights_.cols()) - 1; }
  double clip_floor() const { return clip_floor_; }
  const Eigen::MatrixXd& weights() const { return weights_; }

  /// Unclipped probabilities over all m treatments (they sum to 1).
  std::vector<double> raw_distribution(std::span<const double> context) const;
  /// max(clip_floor, raw probability of `treatment`).
  double predict(std::span<const double> context, int treatment) const;

 private:
  Eigen::MatrixXd weights_;
  int m_;
  double clip_floor_;
};

struct PropensityFitOptions {
  double lambda = kPropensityLambda;
  NewtonOptions newton;
};

PropensityModel fit_propensity_model(const LoggedDataset& dataset, double clip_floor,
                                     const PropensityFitOptions& options = {});

/// Logged propensity when the row carries one, otherwise the model's
/// (clipped) prediction. Throws EstimationError when neither is available.
double propensity(const PropensityModel* model, const Row& row);

/// Where an estimator gets p(t_i | x_i) from.
class PropensitySource {
 public:
  /// Only logged propensities; rows without one are an error.
  static PropensitySource logged();
  /// Model predictions; logged values take precedence when `prefer_logged`.
  static PropensitySource estimated(PropensityModel model, bool prefer_logged = true);
  /// Arbitrary rule, e.g. a deliberately misspecified constant.
  static PropensitySource custom(std::function<double(const Row&)> rule);

  /// Propensity of the row's logged treatment; always in (0,1].
  double operator()(const Row& row) const;

  const PropensityModel* model() const { return model_.get(); }

 private:
  std::shared_ptr<const PropensityModel> model_;
  std::function<double(const Row&)> rule_;
  bool prefer_logged_ = true;
};

}  // namespace ope
