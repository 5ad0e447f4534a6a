#pragma once

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstddef>

#include "parlstance/error.hpp"

namespace parlstance::stats {

/// Two-sided critical value of Student's t: the c with P(|T| > c) = alpha
/// for T ~ t(df).
inline double student_t_critical(double alpha, double df) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
  if (!(df > 0.0)) throw ArgumentError("degrees of freedom must be positive");
  boost::math::students_t dist(df);
  return boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
}

/// Mean and sample (n-1) standard deviation of a 0/1 sample with k ones
/// out of n.
struct BernoulliSample {
  double mean = 0.0;
  double sd = 0.0;
};

inline BernoulliSample bernoulli_sample(std::size_t n, std::size_t k) {
  if (n == 0) return {};
  double nn = static_cast<double>(n);
  double mean = static_cast<double>(k) / nn;
  if (n < 2) return {mean, 0.0};
  // sum (v - mean)^2 = k (1 - mean)^2 + (n - k) mean^2 = n mean (1 - mean)
  double var = nn * mean * (1.0 - mean) / (nn - 1.0);
  return {mean, std::sqrt(std::max(var, 0.0))};
}

}  // namespace parlstance::stats
