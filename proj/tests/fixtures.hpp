#pragma once

// Hand-computed estimator fixture. Target policy: pi(1|x) = 0.75 if x > 0
// else 0.25. Outcome model: mu(x,0) = 1 + 0.5x, mu(x,1) = 2 + x.
//
//  x     t  y  p     direct                      pi/p          ipw term  dr term
//  0.5   1  3  0.5   .25*1.25 + .75*2.5 = 2.1875  .75/.5 = 1.5  4.5       2.1875 + 1.5*0.5 = 2.9375
// -1     0  1  0.8   .75*0.5  + .25*1   = 0.625   .75/.8=.9375  0.9375    0.625 + .9375*0.5 = 1.09375
//  2     1  5  0.25  .25*2    + .75*4   = 3.5     .75/.25 = 3   15        3.5 + 3*1 = 6.5
//  0     0  2  0.4   .75*1    + .25*2   = 1.25    .75/.4=1.875  3.75      1.25 + 1.875*1 = 3.125
//
// DM = 7.5625/4, IPW = 24.1875/4, DR = 13.65625/4, on-policy = 11/4.
// relative_rmse([2.5, 3, 3.5], 2.75): squared relative errors sum to
// (0.0625 + 0.0625 + 0.5625) / 7.5625 = 1/11, so the value is sqrt(1/33).

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "ope/outcome_model.hpp"
#include "ope/policy.hpp"

namespace ope::test {

inline LoggedDataset hand_dataset() {
  return dataset({row({0.5}, 1, 3, 0.5), row({-1}, 0, 1, 0.8), row({2}, 1, 5, 0.25),
                  row({0}, 0, 2, 0.4)},
                 1, "B");
}

inline Policy hand_policy() {
  return Policy::stochastic("A", 2, [](std::span<const double> x, std::span<double> out) {
    out[1] = x[0] > 0 ? 0.75 : 0.25;
    out[0] = 1.0 - out[1];
  });
}

inline OutcomeModel hand_model() {
  Eigen::VectorXd w0(2), w1(2);
  w0 << 1.0, 0.5;
  w1 << 2.0, 1.0;
  return OutcomeModel(ModelFamily::ridge_linear, 0.0, 1, {w0, w1});
}

inline constexpr double kHandDM = 1.890625;
inline constexpr double kHandIPW = 6.046875;
inline constexpr double kHandDR = 3.4140625;
inline constexpr double kHandOnPolicy = 2.75;
inline const std::vector<double> kHandRrmseEstimates{2.5, 3.0, 3.5};
inline constexpr double kHandRrmseTruth = 2.75;
inline const double kHandRrmse = std::sqrt(1.0 / 33.0);

}  // namespace ope::test
