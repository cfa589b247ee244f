#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tscausal/error.hpp"

namespace tscausal {

namespace detail {

/// Gaussian transfer-entropy kernel for a fixed target series, lag, and
/// history length k. TE(X -> Y at lag) = -0.5 * ln(1 - rho^2) where rho is
/// the partial correlation of X(t-lag) and Y(t) given Y(t-1..t-k).
///
/// The target-side moments (history Gram matrix and its factorization) are
/// computed once, so evaluating many sources against the same target (the
/// surrogate loop) costs only the source's cross moments.
class GaussianTeKernel {
 public:
  GaussianTeKernel(std::span<const double> y, int lag, int k)
      : series_len_(y.size()), lag_(lag), k_(k) {
    if (lag < 1) throw Error("gaussian_te: lag must be >= 1");
    if (k < 1) throw Error("gaussian_te: history length k must be >= 1");
    if (series_len_ <= static_cast<std::size_t>(lag + k + 5))
      throw Error("gaussian_te: insufficient samples after lag alignment: need > " +
                  std::to_string(lag + k + 5) + ", got " + std::to_string(series_len_));

    offset_ = static_cast<std::size_t>(std::max(lag, k));
    n_ = series_len_ - offset_;

    // Centered target and history columns over the aligned window.
    target_.resize(n_);
    double mb = 0.0;
    for (std::size_t i = 0; i < n_; ++i) mb += y[offset_ + i];
    mb /= static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) target_[i] = y[offset_ + i] - mb;

    history_.resize(k);
    for (int j = 1; j <= k; ++j) {
      auto& col = history_[j - 1];
      col.resize(n_);
      double m = 0.0;
      for (std::size_t i = 0; i < n_; ++i) m += y[offset_ + i - j];
      m /= static_cast<double>(n_);
      for (std::size_t i = 0; i < n_; ++i) col[i] = y[offset_ + i - j] - m;
    }

    Eigen::MatrixXd gram(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = a; b < k; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n_; ++i) s += history_[a][i] * history_[b][i];
        gram(a, b) = s;
        gram(b, a) = s;
      }
    lu_.compute(gram);
    if (!lu_.isInvertible())
      throw Error("gaussian_te: singular conditioning (collinear target history)");

    Eigen::VectorXd hist_target(k);
    for (int j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n_; ++i) s += history_[j][i] * target_[i];
      hist_target(j) = s;
    }
    target_weights_ = lu_.solve(hist_target);

    double s_bb = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s_bb += target_[i] * target_[i];
    resid_bb_ = s_bb - hist_target.dot(target_weights_);
    if (!(resid_bb_ > 1e-12 * std::max(s_bb, 1e-300)))
      throw Error("gaussian_te: singular conditioning (target explained by its history)");
  }

  /// TE of the source series x (same length as the target series).
  double te(std::span<const double> x) const { return te_circular(x, 0); }

  /// TE with x replaced by its circular shift x[(t + shift) % T].
  double te_circular(std::span<const double> x, std::size_t shift) const {
    if (x.size() != series_len_) throw Error("gaussian_te: series lengths differ");
    const int k = k_;

    double ma = 0.0;
    for (std::size_t i = 0; i < n_; ++i) ma += source_at(x, i, shift);
    ma /= static_cast<double>(n_);

    double s_aa = 0.0, s_ab = 0.0;
    Eigen::VectorXd hist_source(k);
    hist_source.setZero();
    for (std::size_t i = 0; i < n_; ++i) {
      const double a = source_at(x, i, shift) - ma;
      s_aa += a * a;
      s_ab += a * target_[i];
      for (int j = 0; j < k; ++j) hist_source(j) += a * history_[j][i];
    }

    const Eigen::VectorXd source_weights = lu_.solve(hist_source);
    const double resid_aa = s_aa - hist_source.dot(source_weights);
    const double resid_ab = s_ab - hist_source.dot(target_weights_);
    if (!(resid_aa > 1e-12 * std::max(s_aa, 1e-300)))
      throw Error("gaussian_te: singular conditioning (source collinear with target history)");

    double rho2 = (resid_ab * resid_ab) / (resid_aa * resid_bb_);
    rho2 = std::min(rho2, 1.0 - 1e-12);
    return -0.5 * std::log1p(-rho2);
  }

  std::size_t effective_samples() const { return n_; }

 private:
  double source_at(std::span<const double> x, std::size_t i, std::size_t shift) const {
    const std::size_t t = offset_ + i - static_cast<std::size_t>(lag_);
    return x[(t + shift) % series_len_];
  }

  std::size_t series_len_;
  int lag_;
  int k_;
  std::size_t offset_ = 0;
  std::size_t n_ = 0;
  std::vector<double> target_;
  std::vector<std::vector<double>> history_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
  Eigen::VectorXd target_weights_;
  double resid_bb_ = 0.0;
};

/// Per-variable quantile bin edges: edge i sits at the i/bins sample quantile.
inline std::vector<double> quantile_bin_edges(std::span<const double> v, int bins) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges(bins - 1);
  for (int i = 1; i < bins; ++i)
    edges[i - 1] = sorted[(static_cast<std::size_t>(i) * sorted.size()) / bins];
  return edges;
}

inline std::vector<int> discretize(std::span<const double> v,
                                   const std::vector<double>& edges) {
  std::vector<int> bins(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    bins[i] = static_cast<int>(
        std::upper_bound(edges.begin(), edges.end(), v[i]) - edges.begin());
  return bins;
}

/// Plug-in conditional-mutual-information kernel over quantile bins:
/// I(Y_t ; X_{t-lag} | Y_{t-1}). Bin edges are taken over each full series,
/// so circular shifts of the source reuse the same discretization.
class BinnedTeKernel {
 public:
  BinnedTeKernel(std::span<const double> y, int lag, int k, int bins)
      : series_len_(y.size()), lag_(lag), bins_(bins) {
    if (lag < 1) throw Error("binned_te: lag must be >= 1");
    if (k != 1) throw Error("binned_te: plug-in estimator supports k = 1 only");
    if (bins < 2) throw Error("binned_te: bins must be >= 2");
    if (series_len_ <= static_cast<std::size_t>(lag + 1 + 5))
      throw Error("binned_te: insufficient samples after lag alignment: need > " +
                  std::to_string(lag + 1 + 5) + ", got " + std::to_string(series_len_));
    if (static_cast<double>(bins) > std::sqrt(static_cast<double>(series_len_)))
      throw Error("binned_te: " + std::to_string(bins) +
                  " bins exceed sqrt(T); histogram would be undersampled");
    target_bins_ = discretize(y, quantile_bin_edges(y, bins));
    offset_ = static_cast<std::size_t>(std::max(lag, 1));
    n_ = series_len_ - offset_;
  }

  double te(std::span<const double> x) { return te_circular(x, 0); }

  double te_circular(std::span<const double> x, std::size_t shift) {
    if (x.size() != series_len_) throw Error("binned_te: series lengths differ");
    if (source_bins_.empty())
      source_bins_ = discretize(x, quantile_bin_edges(x, bins_));

    const int m = bins_;
    std::vector<double> joint(static_cast<std::size_t>(m) * m * m, 0.0);
    std::vector<double> target_hist(static_cast<std::size_t>(m) * m, 0.0);
    std::vector<double> source_hist(static_cast<std::size_t>(m) * m, 0.0);
    std::vector<double> hist(m, 0.0);

    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t t = offset_ + i;
      const int a = target_bins_[t];
      const int b = source_bins_[(t - static_cast<std::size_t>(lag_) + shift) % series_len_];
      const int c = target_bins_[t - 1];
      joint[(static_cast<std::size_t>(a) * m + b) * m + c] += 1.0;
      target_hist[static_cast<std::size_t>(a) * m + c] += 1.0;
      source_hist[static_cast<std::size_t>(b) * m + c] += 1.0;
      hist[c] += 1.0;
    }

    const double total = static_cast<double>(n_);
    double cmi = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c) {
          const double n_abc = joint[(static_cast<std::size_t>(a) * m + b) * m + c];
          if (n_abc == 0.0) continue;
          const double n_ac = target_hist[static_cast<std::size_t>(a) * m + c];
          const double n_bc = source_hist[static_cast<std::size_t>(b) * m + c];
          cmi += (n_abc / total) * std::log((n_abc * hist[c]) / (n_ac * n_bc));
        }
    return std::max(cmi, 0.0);  // plug-in estimate can go slightly negative
  }

  /// Invalidates the cached source discretization (call when x changes).
  void reset_source() { source_bins_.clear(); }

 private:
  std::size_t series_len_;
  int lag_;
  int bins_;
  std::size_t offset_ = 0;
  std::size_t n_ = 0;
  std::vector<int> target_bins_;
  std::vector<int> source_bins_;
};

}  // namespace detail

/// Transfer entropy of X -> Y at the given lag under the Gaussian
/// assumption, conditioning on k steps of the target's own history.
/// Nonnegative by construction; rho^2 is capped at 1 - 1e-12 so a
/// deterministic copy yields a finite value (~13.8 nats).
inline double gaussian_te(std::span<const double> x, std::span<const double> y,
                          int lag, int k) {
  if (x.size() != y.size()) throw Error("gaussian_te: series lengths differ");
  return detail::GaussianTeKernel(y, lag, k).te(x);
}

/// Plug-in binned transfer entropy I(Y_t ; X_{t-lag} | Y_{t-1}) over
/// per-variable quantile bins. k is fixed to 1; negative plug-in estimates
/// clamp to 0.
inline double binned_te(std::span<const double> x, std::span<const double> y,
                        int lag, int k, int bins) {
  if (x.size() != y.size()) throw Error("binned_te: series lengths differ");
  return detail::BinnedTeKernel(y, lag, k, bins).te(x);
}

}  // namespace tscausal
