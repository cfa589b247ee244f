#pragma once

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <cstddef>
#include <span>

#include "tscausal/error.hpp"

namespace tscausal {

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation with the n-1 denominator.
inline double sample_std(std::span<const double> v) {
  if (v.size() < 2) throw Error("sample_std: need at least 2 samples");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) {
    const double d = x - m;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// Pearson correlation. Returns 0 and sets *degenerate (when given) if
/// either input has (numerically) zero variance.
inline double pearson(std::span<const double> x, std::span<const double> y,
                      bool* degenerate = nullptr) {
  if (x.size() != y.size() || x.size() < 3)
    throw Error("pearson: inputs must have equal length >= 3");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (degenerate) *degenerate = false;
  if (sxx <= 0.0 || syy <= 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

/// Two-sided tail probability of a Student-t statistic with dof degrees of
/// freedom, evaluated through the regularized incomplete beta function:
/// p = I_{dof/(dof+t^2)}(dof/2, 1/2).
inline double student_t_two_sided_pvalue(double t, double dof) {
  if (dof < 1.0) throw Error("student_t_two_sided_pvalue: dof must be >= 1");
  if (t == 0.0) return 1.0;
  if (!std::isfinite(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return boost::math::ibeta(0.5 * dof, 0.5, x);
}

}  // namespace tscausal
