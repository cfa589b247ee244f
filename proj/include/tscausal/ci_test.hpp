#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tscausal/error.hpp"
#include "tscausal/stats.hpp"

namespace tscausal {

/// Outcome of one conditional-independence test.
///
/// statistic is the partial correlation in [-1, 1]; p_value the two-sided
/// Student-t tail probability of t = statistic * sqrt(dof / (1 - statistic^2))
/// with dof = n - |Z| - 2. degenerate marks tests where x or y was fully
/// explained by Z (statistic reported as 0, p_value as 1).
struct CITestResult {
  double statistic = 0.0;
  long dof = 0;
  double p_value = 1.0;
  bool degenerate = false;
};

// Statistic cap keeps the t-transform finite on deterministic relationships.
inline constexpr double kStatisticCap = 1.0 - 1e-12;

/// Residuals of the least-squares regression of v on Z plus an intercept.
/// Z may be empty, in which case the residuals are v minus its mean.
/// A rank-deficient design matrix is an error naming the collinear
/// conditioners (by the optional names, else by position in Z).
inline std::vector<double> ols_residuals(
    std::span<const double> v, const std::vector<std::span<const double>>& conditioners,
    const std::vector<std::string>& names = {}) {
  const std::size_t n = v.size();
  const std::size_t p = conditioners.size();
  for (const auto& z : conditioners)
    if (z.size() != n) throw Error("ols_residuals: series lengths differ");
  if (n <= p + 2)
    throw Error("ols_residuals: need more than " + std::to_string(p + 2) +
                " samples, got " + std::to_string(n));

  if (p == 0) {
    const double m = mean(v);
    std::vector<double> res(n);
    for (std::size_t i = 0; i < n; ++i) res[i] = v[i] - m;
    return res;
  }

  Eigen::MatrixXd design(n, p + 1);
  Eigen::VectorXd target(n);
  for (std::size_t i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    target(i) = v[i];
  }
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i) design(i, j + 1) = conditioners[j][i];

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < static_cast<Eigen::Index>(p + 1)) {
    // Columns outside the first `rank` pivots are linearly dependent on the rest.
    const auto perm = qr.colsPermutation().indices();
    std::string offenders;
    for (Eigen::Index k = qr.rank(); k < perm.size(); ++k) {
      const Eigen::Index col = perm(k);
      if (col == 0) continue;  // intercept
      if (!offenders.empty()) offenders += ", ";
      const std::size_t zi = static_cast<std::size_t>(col - 1);
      offenders += (zi < names.size()) ? names[zi] : "Z[" + std::to_string(zi) + "]";
    }
    throw Error("ols_residuals: collinear conditioners: " + offenders);
  }

  const Eigen::VectorXd fitted = design * qr.solve(target);
  std::vector<double> res(n);
  for (std::size_t i = 0; i < n; ++i) res[i] = v[i] - fitted(i);
  return res;
}

/// Linear partial-correlation CI test: statistic is the Pearson correlation
/// of the OLS residuals of x and y on Z; symmetric in x and y.
inline CITestResult parcorr_test(std::span<const double> x, std::span<const double> y,
                                 const std::vector<std::span<const double>>& conditioners,
                                 const std::vector<std::string>& names = {}) {
  const std::size_t n = x.size();
  if (y.size() != n) throw Error("parcorr_test: series lengths differ");
  if (n <= conditioners.size() + 3)
    throw Error("parcorr_test: need more than " +
                std::to_string(conditioners.size() + 3) + " samples, got " +
                std::to_string(n));

  const std::vector<double> rx = ols_residuals(x, conditioners, names);
  const std::vector<double> ry = ols_residuals(y, conditioners, names);

  CITestResult result;
  result.dof = static_cast<long>(n) - static_cast<long>(conditioners.size()) - 2;

  // A residual norm at rounding level relative to the centered input means
  // the series is fully explained by Z: report independence, flagged.
  const auto centered_ss = [](std::span<const double> v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double e : v) ss += (e - m) * (e - m);
    return ss;
  };
  const auto ss = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return s;
  };
  constexpr double kDegenerateTol = 1e-16;  // on variance ratio, i.e. 1e-8 on scale
  if (ss(rx) <= kDegenerateTol * centered_ss(x) || ss(ry) <= kDegenerateTol * centered_ss(y)) {
    result.statistic = 0.0;
    result.p_value = 1.0;
    result.degenerate = true;
    return result;
  }

  bool degenerate = false;
  double r = pearson(rx, ry, &degenerate);
  if (degenerate) {
    result.statistic = 0.0;
    result.p_value = 1.0;
    result.degenerate = true;
    return result;
  }
  r = std::clamp(r, -kStatisticCap, kStatisticCap);
  result.statistic = r;
  const double t = r * std::sqrt(static_cast<double>(result.dof) / (1.0 - r * r));
  result.p_value = student_t_two_sided_pvalue(t, static_cast<double>(result.dof));
  return result;
}

}  // namespace tscausal
