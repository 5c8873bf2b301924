#include "ope/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ope/errors.hpp"

namespace ope {

PropensityModel::PropensityModel(Eigen::MatrixXd weights, int m, double clip_floor)
    : weights_(std::move(weights)), m_(m), clip_floor_(clip_floor) {
  if (m_ < 1) throw EstimationError("propensity model needs m >= 1");
  if (weights_.rows() != m_ - 1) {
    throw EstimationError("propensity model needs m-1 weight rows");
  }
  if (!(clip_floor_ > 0.0 && clip_floor_ <= 0.5)) {
    throw EstimationError("clip_floor must lie in (0, 0.5], got " + format_double(clip_floor_));
  }
  if (!weights_.allFinite()) throw EstimationError("propensity weights are not finite");
}

std::vector<double> PropensityModel::raw_distribution(std::span<const double> context) const {
  if (m_ > 1 && std::ssize(context) != d()) {
    throw EstimationError("context length " + std::to_string(context.size()) +
                          " does not match propensity model dimension " + std::to_string(d()));
  }
  std::vector<double> scores(static_cast<std::size_t>(m_), 0.0);
  for (int k = 0; k + 1 < m_; ++k) {
    double z = weights_(k, 0);
    for (int j = 0; j < d(); ++j) z += weights_(k, j + 1) * context[static_cast<std::size_t>(j)];
    scores[static_cast<std::size_t>(k + 1)] = z;
  }
  if (m_ == 2) {
    const double p1 = sigmoid(scores[1]);
    return {1.0 - p1, p1};
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (auto& s : scores) {
    s = std::exp(s - top);
    total += s;
  }
  for (auto& s : scores) s /= total;
  return scores;
}

double PropensityModel::predict(std::span<const double> context, int treatment) const {
  if (treatment < 0 || treatment >= m_) {
    throw EstimationError("treatment " + std::to_string(treatment) +
                          " outside the propensity model's range");
  }
  const auto dist = raw_distribution(context);
  return std::max(clip_floor_, dist[static_cast<std::size_t>(treatment)]);
}

namespace {

// Softmax regression, class 0 as reference. Parameters are stacked by class:
// theta[k*p .. (k+1)*p) scores class k+1.
struct MultinomialProblem {
  const Eigen::MatrixXd& x;
  const std::vector<int>& labels;
  int classes;
  double lambda;

  Eigen::Index p() const { return x.cols(); }
  Eigen::Index dim() const { return (classes - 1) * p(); }

  Eigen::MatrixXd probabilities(const Eigen::VectorXd& theta) const {
    Eigen::MatrixXd probs(x.rows(), classes);
    const Eigen::Map<const Eigen::MatrixXd> w(theta.data(), p(), classes - 1);
    const Eigen::MatrixXd z = x * w;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double top = 0.0;
      for (int k = 0; k + 1 < classes; ++k) top = std::max(top, z(i, k));
      double total = std::exp(-top);
      probs(i, 0) = total;
      for (int k = 1; k < classes; ++k) {
        probs(i, k) = std::exp(z(i, k - 1) - top);
        total += probs(i, k);
      }
      probs.row(i) /= total;
    }
    return probs;
  }

  double loss(const Eigen::VectorXd& theta) const {
    const Eigen::Map<const Eigen::MatrixXd> w(theta.data(), p(), classes - 1);
    const Eigen::MatrixXd z = x * w;
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double top = 0.0;
      for (int k = 0; k + 1 < classes; ++k) top = std::max(top, z(i, k));
      double lse = std::exp(-top);
      for (int k = 0; k + 1 < classes; ++k) lse += std::exp(z(i, k) - top);
      total += top + std::log(lse);
      const int t = labels[static_cast<std::size_t>(i)];
      if (t > 0) total -= z(i, t - 1);
    }
    for (int k = 0; k + 1 < classes; ++k) {
      total += 0.5 * lambda * theta.segment(k * p() + 1, p() - 1).squaredNorm();
    }
    return total;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& theta, const Eigen::MatrixXd& probs) const {
    Eigen::VectorXd g(dim());
    for (int k = 0; k + 1 < classes; ++k) {
      Eigen::VectorXd resid = probs.col(k + 1);
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (labels[static_cast<std::size_t>(i)] == k + 1) resid(i) -= 1.0;
      }
      g.segment(k * p(), p()) = x.transpose() * resid;
      g.segment(k * p() + 1, p() - 1) += lambda * theta.segment(k * p() + 1, p() - 1);
    }
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::MatrixXd& probs) const {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim(), dim());
    for (int a = 0; a + 1 < classes; ++a) {
      for (int b = a; b + 1 < classes; ++b) {
        Eigen::VectorXd s(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          s(i) = probs(i, a + 1) * ((a == b ? 1.0 : 0.0) - probs(i, b + 1));
        }
        const Eigen::MatrixXd block = x.transpose() * s.asDiagonal() * x;
        h.block(a * p(), b * p(), p(), p()) = block;
        if (a != b) h.block(b * p(), a * p(), p(), p()) = block.transpose();
      }
      for (Eigen::Index j = 1; j < p(); ++j) h(a * p() + j, a * p() + j) += lambda;
    }
    return h;
  }
};

Eigen::MatrixXd fit_multinomial(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                int classes, double lambda, const NewtonOptions& options) {
  const MultinomialProblem problem{x, labels, classes, lambda};
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(problem.dim());
  Eigen::MatrixXd probs = problem.probabilities(theta);
  double loss = problem.loss(theta);
  Eigen::VectorXd grad = problem.gradient(theta, probs);
  double grad_norm = grad.lpNorm<Eigen::Infinity>();

  for (int iter = 0; iter < options.max_iterations && grad_norm > options.gradient_tolerance;
       ++iter) {
    Eigen::MatrixXd h = problem.hessian(probs);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
      h.diagonal().array() += 1e-10 * std::max(1.0, h.diagonal().maxCoeff());
      ldlt.compute(h);
    }
    const Eigen::VectorXd step = ldlt.solve(-grad);
    bool accepted = false;
    double scale = 1.0;
    for (int halving = 0; halving < 60; ++halving, scale *= 0.5) {
      const Eigen::VectorXd cand = theta + scale * step;
      const double cand_loss = problem.loss(cand);
      if (!std::isfinite(cand_loss)) continue;
      const Eigen::MatrixXd cand_probs = problem.probabilities(cand);
      const Eigen::VectorXd cand_grad = problem.gradient(cand, cand_probs);
      const double cand_norm = cand_grad.lpNorm<Eigen::Infinity>();
      const double slack =
          16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(loss));
      if (cand_loss < loss || (cand_loss <= loss + slack && cand_norm < grad_norm)) {
        theta = cand;
        probs = cand_probs;
        loss = cand_loss;
        grad = cand_grad;
        grad_norm = cand_norm;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  const Eigen::Map<const Eigen::MatrixXd> w(theta.data(), problem.p(), classes - 1);
  return w.transpose();
}

}  // namespace

PropensityModel fit_propensity_model(const LoggedDataset& dataset, double clip_floor,
                                     const PropensityFitOptions& options) {
  if (dataset.empty()) throw EstimationError("cannot fit a propensity model on an empty dataset");
  std::vector<std::size_t> counts(static_cast<std::size_t>(dataset.m), 0);
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const auto& r : dataset.rows) {
    ++counts.at(static_cast<std::size_t>(r.treatment));
    labels.push_back(r.treatment);
  }
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t] == 0) {
      throw EstimationError("treatment " + std::to_string(t) +
                            " never occurs; its propensity cannot be estimated");
    }
  }
  if (dataset.m == 1) return PropensityModel(Eigen::MatrixXd(0, dataset.d + 1), 1, clip_floor);

  const Eigen::MatrixXd x = design_matrix(dataset);
  if (dataset.m == 2) {
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = labels[static_cast<std::size_t>(i)] == 1;
    const auto fit = fit_logistic(x, y, options.lambda, options.newton);
    return PropensityModel(fit.weights.transpose(), 2, clip_floor);
  }
  return PropensityModel(fit_multinomial(x, labels, dataset.m, options.lambda, options.newton),
                         dataset.m, clip_floor);
}

double propensity(const PropensityModel* model, const Row& row) {
  if (row.logged_propensity) return *row.logged_propensity;
  if (model == nullptr) {
    throw EstimationError("row has no logged propensity and no propensity model is available");
  }
  return model->predict(row.context, row.treatment);
}

PropensitySource PropensitySource::logged() { return PropensitySource{}; }

PropensitySource PropensitySource::estimated(PropensityModel model, bool prefer_logged) {
  PropensitySource s;
  s.model_ = std::make_shared<const PropensityModel>(std::move(model));
  s.prefer_logged_ = prefer_logged;
  return s;
}

PropensitySource PropensitySource::custom(std::function<double(const Row&)> rule) {
  PropensitySource s;
  s.rule_ = std::move(rule);
  return s;
}

double PropensitySource::operator()(const Row& row) const {
  double p = 0.0;
  if (rule_) {
    p = rule_(row);
  } else if (prefer_logged_) {
    p = propensity(model_.get(), row);
  } else {
    p = model_->predict(row.context, row.treatment);
  }
  if (!(p > 0.0 && p <= 1.0)) {
    throw EstimationError("propensity " + format_double(p) + " outside (0,1]");
  }
  return p;
}

}  // namespace ope
