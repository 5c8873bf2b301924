#include "ope/outcome_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ope/errors.hpp"

namespace ope {

std::string_view to_string(ModelFamily family) {
  return family == ModelFamily::logistic ? "logistic" : "ridge_linear";
}

ModelFamily model_family_from_string(std::string_view name) {
  if (name == "ridge_linear") return ModelFamily::ridge_linear;
  if (name == "logistic") return ModelFamily::logistic;
  throw ConfigError("unknown outcome model family '" + std::string(name) +
                    "' (expected ridge_linear or logistic)");
}

Eigen::MatrixXd design_matrix(const LoggedDataset& dataset,
                              const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), dataset.d + 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto& ctx = dataset.rows[rows[static_cast<std::size_t>(i)]].context;
    x(i, 0) = 1.0;
    for (int j = 0; j < dataset.d; ++j) x(i, j + 1) = ctx[static_cast<std::size_t>(j)];
  }
  return x;
}

Eigen::MatrixXd design_matrix(const LoggedDataset& dataset) {
  std::vector<std::size_t> all(dataset.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return design_matrix(dataset, all);
}

namespace {

Eigen::MatrixXd penalized_gram(const Eigen::MatrixXd& x, double lambda) {
  Eigen::MatrixXd a = x.transpose() * x;
  for (Eigen::Index j = 1; j < a.rows(); ++j) a(j, j) += lambda;
  return a;
}

bool is_singular(const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
  if (ldlt.info() != Eigen::Success) return true;
  const auto& diag = ldlt.vectorD();
  const double top = diag.cwiseAbs().maxCoeff();
  const double tol = 1e-12 * static_cast<double>(diag.size()) * top;
  return !(top > 0.0) || diag.minCoeff() <= tol;
}

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            double lambda) {
  if (lambda < 0.0) throw EstimationError("ridge lambda must be >= 0");
  const Eigen::MatrixXd a = penalized_gram(x, lambda);
  const Eigen::VectorXd b = x.transpose() * y;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (is_singular(ldlt)) {
    throw EstimationError("singular normal equations (lambda = " + format_double(lambda) +
                          "); use lambda > 0");
  }
  Eigen::VectorXd w = ldlt.solve(b);
  // One step of iterative refinement.
  w += ldlt.solve(b - a * w);
  return w;
}

Eigen::VectorXd ridge_normal_residual(const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& w, double lambda) {
  return penalized_gram(x, lambda) * w - x.transpose() * y;
}

double logistic_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& w, double lambda) {
  const Eigen::VectorXd z = x * w;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += softplus(z(i)) - y(i) * z(i);
  loss += 0.5 * lambda * w.tail(w.size() - 1).squaredNorm();
  return loss;
}

Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& w, double lambda) {
  const Eigen::VectorXd z = x * w;
  Eigen::VectorXd resid(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) resid(i) = sigmoid(z(i)) - y(i);
  Eigen::VectorXd g = x.transpose() * resid;
  g.tail(g.size() - 1) += lambda * w.tail(w.size() - 1);
  return g;
}

LogisticFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         double lambda, const NewtonOptions& options) {
  const Eigen::Index p = x.cols();
  LogisticFit fit;
  fit.weights = Eigen::VectorXd::Zero(p);
  double loss = logistic_loss(x, y, fit.weights, lambda);
  Eigen::VectorXd grad = logistic_gradient(x, y, fit.weights, lambda);
  fit.gradient_norm = grad.lpNorm<Eigen::Infinity>();

  while (fit.gradient_norm > options.gradient_tolerance &&
         fit.iterations < options.max_iterations) {
    const Eigen::VectorXd z = x * fit.weights;
    Eigen::VectorXd s(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double pr = sigmoid(z(i));
      s(i) = pr * (1.0 - pr);
    }
    Eigen::MatrixXd hessian = x.transpose() * s.asDiagonal() * x;
    for (Eigen::Index j = 1; j < p; ++j) hessian(j, j) += lambda;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (is_singular(ldlt)) {
      // Damp only the step; the stationary point is unchanged.
      const double jitter = 1e-10 * std::max(1.0, hessian.diagonal().maxCoeff());
      hessian.diagonal().array() += jitter;
      ldlt.compute(hessian);
    }
    const Eigen::VectorXd step = ldlt.solve(-grad);

    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, scale *= 0.5) {
      const Eigen::VectorXd candidate = fit.weights + scale * step;
      const double cand_loss = logistic_loss(x, y, candidate, lambda);
      if (!std::isfinite(cand_loss)) continue;
      const Eigen::VectorXd cand_grad = logistic_gradient(x, y, candidate, lambda);
      const double cand_norm = cand_grad.lpNorm<Eigen::Infinity>();
      const double slack = 16.0 * std::numeric_limits<double>::epsilon() *
                           std::max(1.0, std::abs(loss));
      if (cand_loss < loss || (cand_loss <= loss + slack && cand_norm < fit.gradient_norm)) {
        fit.weights = candidate;
        loss = cand_loss;
        grad = cand_grad;
        fit.gradient_norm = cand_norm;
        accepted = true;
        break;
      }
    }
    ++fit.iterations;
    if (!accepted) break;
  }
  fit.converged = fit.gradient_norm <= options.gradient_tolerance;
  return fit;
}

OutcomeModel::OutcomeModel(ModelFamily family, double lambda, int d,
                           std::vector<std::optional<Eigen::VectorXd>> arm_weights)
    : family_(family), lambda_(lambda), d_(d), arms_(std::move(arm_weights)) {
  for (std::size_t t = 0; t < arms_.size(); ++t) {
    if (!arms_[t]) continue;
    if (arms_[t]->size() != d_ + 1) {
      throw EstimationError("arm " + std::to_string(t) + " weight vector has length " +
                            std::to_string(arms_[t]->size()) + ", expected d+1 = " +
                            std::to_string(d_ + 1));
    }
    if (!arms_[t]->allFinite()) {
      throw EstimationError("arm " + std::to_string(t) + " weights are not finite");
    }
  }
}

bool OutcomeModel::has_arm(int t) const {
  return t >= 0 && t < m() && arms_[static_cast<std::size_t>(t)].has_value();
}

const Eigen::VectorXd& OutcomeModel::weights(int t) const {
  if (!has_arm(t)) {
    throw EstimationError("outcome model has no fitted arm for treatment " + std::to_string(t));
  }
  return *arms_[static_cast<std::size_t>(t)];
}

double OutcomeModel::predict(std::span<const double> context, int treatment) const {
  const auto& w = weights(treatment);
  if (std::ssize(context) != d_) {
    throw EstimationError("context length " + std::to_string(context.size()) +
                          " does not match model dimension " + std::to_string(d_));
  }
  double z = w(0);
  for (int j = 0; j < d_; ++j) z += w(j + 1) * context[static_cast<std::size_t>(j)];
  if (family_ == ModelFamily::ridge_linear) return z;
  return std::clamp(sigmoid(z), std::numeric_limits<double>::min(),
                    std::nextafter(1.0, 0.0));
}

OutcomeModel fit_outcome_model(const LoggedDataset& dataset, ModelFamily family,
                               double lambda, const OutcomeFitOptions& options) {
  if (dataset.empty()) throw EstimationError("cannot fit an outcome model on an empty dataset");
  if (!(lambda >= 0.0)) throw EstimationError("outcome model lambda must be >= 0");
  if (family == ModelFamily::logistic && dataset.outcome_kind != OutcomeKind::binary) {
    throw EstimationError("logistic outcome model requires a binary outcome");
  }

  std::vector<std::vector<std::size_t>> by_arm(static_cast<std::size_t>(dataset.m));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_arm.at(static_cast<std::size_t>(dataset.rows[i].treatment)).push_back(i);
  }

  std::vector<std::optional<Eigen::VectorXd>> arms(by_arm.size());
  for (std::size_t t = 0; t < by_arm.size(); ++t) {
    if (by_arm[t].empty()) {
      if (options.coverage == ArmCoverage::require_all) {
        throw EstimationError("treatment arm " + std::to_string(t) +
                              " has no rows; its outcome model is undefined");
      }
      continue;
    }
    const Eigen::MatrixXd x = design_matrix(dataset, by_arm[t]);
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      y(i) = dataset.rows[by_arm[t][static_cast<std::size_t>(i)]].outcome;
    }
    try {
      if (family == ModelFamily::ridge_linear) {
        arms[t] = solve_ridge(x, y, lambda);
      } else {
        arms[t] = fit_logistic(x, y, lambda, options.newton).weights;
      }
    } catch (const EstimationError& e) {
      throw EstimationError("arm " + std::to_string(t) + ": " + e.what());
    }
  }
  return OutcomeModel(family, lambda, dataset.d, std::move(arms));
}

OutcomePredictions OutcomePredictions::select(const std::vector<std::size_t>& rows) const {
  OutcomePredictions out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(rows[i]));
  }
  out.available = available;
  return out;
}

OutcomePredictions predict_all(const OutcomeModel& model, const LoggedDataset& dataset) {
  OutcomePredictions out;
  out.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(dataset.size()),
                                         dataset.m, std::numeric_limits<double>::quiet_NaN());
  out.available.assign(static_cast<std::size_t>(dataset.m), false);
  for (int t = 0; t < dataset.m; ++t) {
    if (!model.has_arm(t)) continue;
    out.available[static_cast<std::size_t>(t)] = true;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      out.values(static_cast<Eigen::Index>(i), t) = model.predict(dataset.rows[i].context, t);
    }
  }
  return out;
}

}  // namespace ope
