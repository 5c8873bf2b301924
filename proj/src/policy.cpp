#include "ope/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ope {

std::string_view to_string(PolicySpec::Family family) {
  switch (family) {
    case PolicySpec::Family::constant: return "constant";
    case PolicySpec::Family::uniform: return "uniform";
    case PolicySpec::Family::argmax: return "argmax";
    case PolicySpec::Family::threshold: return "threshold";
    case PolicySpec::Family::softmax: return "softmax";
    case PolicySpec::Family::logistic: return "logistic";
  }
  return "?";
}

PolicySpec::Family policy_family_from_string(std::string_view name) {
  using F = PolicySpec::Family;
  for (F f : {F::constant, F::uniform, F::argmax, F::threshold, F::softmax, F::logistic}) {
    if (to_string(f) == name) return f;
  }
  throw std::invalid_argument("unknown policy family '" + std::string(name) + "'");
}

Policy::Policy(Kind kind, std::string id, int m, DecideFn decide, DistributionFn dist)
    : kind_(kind),
      id_(std::move(id)),
      m_(m),
      decide_(std::move(decide)),
      distribution_(std::move(dist)) {
  if (m_ < 1) throw std::invalid_argument("policy needs at least one treatment");
}

Policy Policy::deterministic(std::string id, int m, DecideFn decide) {
  return Policy(Kind::deterministic, std::move(id), m, std::move(decide), nullptr);
}

Policy Policy::stochastic(std::string id, int m, DistributionFn distribution) {
  return Policy(Kind::stochastic, std::move(id), m, nullptr, std::move(distribution));
}

Policy Policy::uniform(std::string id, int m) {
  return stochastic(std::move(id), m, [m](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 1.0 / m);
  });
}

Policy Policy::constant(std::string id, int treatment, int m) {
  if (treatment < 0 || treatment >= m) {
    throw std::invalid_argument("constant policy treatment outside {0..m-1}");
  }
  return deterministic(std::move(id), m, [treatment](std::span<const double>) { return treatment; });
}

int Policy::decide(std::span<const double> context) const {
  if (kind_ == Kind::deterministic) {
    const int t = decide_(context);
    if (t < 0 || t >= m_) {
      throw std::out_of_range("policy '" + id_ + "' decided treatment " +
                              std::to_string(t) + " outside {0.." +
                              std::to_string(m_ - 1) + "}");
    }
    return t;
  }
  const auto probs = distribution(context);
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

void Policy::distribution(std::span<const double> context, std::span<double> out) const {
  if (std::ssize(out) != m_) throw std::invalid_argument("distribution buffer size != m");
  if (kind_ == Kind::deterministic) {
    std::fill(out.begin(), out.end(), 0.0);
    out[decide(context)] = 1.0;
  } else {
    distribution_(context, out);
  }
}

std::vector<double> Policy::distribution(std::span<const double> context) const {
  std::vector<double> out(m_);
  distribution(context, out);
  return out;
}

double Policy::prob(std::span<const double> context, int treatment) const {
  if (treatment < 0 || treatment >= m_) {
    throw std::out_of_range("treatment " + std::to_string(treatment) +
                            " outside {0.." + std::to_string(m_ - 1) +
                            "} for policy '" + id_ + "'");
  }
  if (kind_ == Kind::deterministic) return decide(context) == treatment ? 1.0 : 0.0;
  return distribution(context)[treatment];
}

int Policy::sample(std::span<const double> context, Rng& rng) const {
  if (kind_ == Kind::deterministic) return decide(context);
  const auto probs = distribution(context);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (int t = 0; t < m_; ++t) {
    acc += probs[t];
    if (u < acc) return t;
  }
  // u landed in the rounding gap above the cumulative sum.
  for (int t = m_ - 1; t >= 0; --t) {
    if (probs[t] > 0.0) return t;
  }
  return m_ - 1;
}

namespace {

double affine(const std::vector<double>& w, std::span<const double> x) {
  if (w.size() != x.size() + 1) {
    throw std::invalid_argument("policy weight length " + std::to_string(w.size()) +
                                " does not match context dimension " +
                                std::to_string(x.size()) + " + 1");
  }
  double s = w[0];
  for (std::size_t j = 0; j < x.size(); ++j) s += w[j + 1] * x[j];
  return s;
}

void check_rows(const PolicySpec& spec, std::size_t expected) {
  if (spec.weights.size() != expected) {
    throw std::invalid_argument("policy '" + spec.id + "' (" +
                                std::string(to_string(spec.family)) + ") needs " +
                                std::to_string(expected) + " weight row(s), got " +
                                std::to_string(spec.weights.size()));
  }
  for (const auto& row : spec.weights) {
    if (row.empty()) throw std::invalid_argument("policy '" + spec.id + "' has an empty weight row");
    if (row.size() != spec.weights.front().size()) {
      throw std::invalid_argument("policy '" + spec.id + "' weight rows differ in length");
    }
  }
}

void softmax_with_floor(const std::vector<double>& scores, double floor,
                        std::span<double> out) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    out[t] = std::exp(scores[t] - top);
    total += out[t];
  }
  const double scale = 1.0 - floor * static_cast<double>(scores.size());
  for (std::size_t t = 0; t < scores.size(); ++t) out[t] = floor + scale * (out[t] / total);
}

}  // namespace

Policy make_policy(const PolicySpec& spec) {
  using F = PolicySpec::Family;
  const int m = spec.m;
  if (m < 1) throw std::invalid_argument("policy '" + spec.id + "' needs m >= 1");
  if (spec.floor < 0.0 || spec.floor * m >= 1.0) {
    throw std::invalid_argument("policy '" + spec.id + "' floor must satisfy 0 <= floor < 1/m");
  }
  switch (spec.family) {
    case F::constant:
      return Policy::constant(spec.id, spec.treatment, m);
    case F::uniform:
      return Policy::uniform(spec.id, m);
    case F::argmax: {
      check_rows(spec, static_cast<std::size_t>(m));
      return Policy::deterministic(spec.id, m, [w = spec.weights](std::span<const double> x) {
        int best = 0;
        double best_score = affine(w[0], x);
        for (std::size_t t = 1; t < w.size(); ++t) {
          const double s = affine(w[t], x);
          if (s > best_score) {
            best = static_cast<int>(t);
            best_score = s;
          }
        }
        return best;
      });
    }
    case F::threshold: {
      if (m != 2) throw std::invalid_argument("threshold policy requires m = 2");
      check_rows(spec, 1);
      return Policy::deterministic(spec.id, m, [w = spec.weights[0]](std::span<const double> x) {
        return affine(w, x) > 0.0 ? 1 : 0;
      });
    }
    case F::softmax: {
      check_rows(spec, static_cast<std::size_t>(m));
      return Policy::stochastic(
          spec.id, m,
          [w = spec.weights, floor = spec.floor](std::span<const double> x, std::span<double> out) {
            std::vector<double> scores(w.size());
            for (std::size_t t = 0; t < w.size(); ++t) scores[t] = affine(w[t], x);
            softmax_with_floor(scores, floor, out);
          });
    }
    case F::logistic: {
      if (m != 2) throw std::invalid_argument("logistic policy requires m = 2");
      check_rows(spec, 1);
      return Policy::stochastic(
          spec.id, m,
          [w = spec.weights[0], floor = spec.floor](std::span<const double> x, std::span<double> out) {
            const double z = affine(w, x);
            const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                                    : std::exp(z) / (1.0 + std::exp(z));
            out[1] = floor + (1.0 - 2.0 * floor) * s;
            out[0] = 1.0 - out[1];
          });
    }
  }
  throw std::invalid_argument("unhandled policy family");
}

}  // namespace ope
