#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tscausal/dataset.hpp"
#include "tscausal/error.hpp"
#include "tscausal/parallel.hpp"
#include "tscausal/rng.hpp"
#include "tscausal/transfer_entropy.hpp"

namespace tscausal {

enum class TeEstimator { kGaussian, kBinned };

/// Configuration of the transfer-entropy feature filter.
struct FilterConfig {
  int tau_min = 1;
  int tau_max = 1;
  double alpha_filter = 0.05;
  TeEstimator estimator = TeEstimator::kGaussian;
  int n_surrogates = 100;
  int bins = 8;           // binned estimator only
  int k = 1;              // target history length
  std::uint64_t seed = 0;
  std::vector<std::string> protected_vars;  // never excluded

  void validate() const {
    if (tau_min < 1) throw Error("filter config: tau_min must be >= 1");
    if (tau_max < tau_min) throw Error("filter config: tau_max must be >= tau_min");
    if (!(alpha_filter > 0.0 && alpha_filter < 1.0))
      throw Error("filter config: alpha_filter must be in (0,1)");
    if (n_surrogates < 19) throw Error("filter config: n_surrogates must be >= 19");
    if (bins < 2) throw Error("filter config: bins must be >= 2");
    if (k < 1) throw Error("filter config: k must be >= 1");
  }
};

/// One scored directed lagged association. te is in nats and nonnegative.
struct CandidateLink {
  std::string source;
  std::string target;
  int lag = 1;
  double te = 0.0;
  double p_value = 0.0;
};

/// The filter's output: the retained variable subset and the accepted
/// candidate links (the hypothetical causal model handed to discovery).
struct FilterResult {
  std::vector<std::string> selected;
  std::vector<std::string> rejected;
  std::vector<CandidateLink> candidates;
};

namespace detail {

inline double observed_te(const FilterConfig& cfg, std::span<const double> x,
                          GaussianTeKernel* gk, BinnedTeKernel* bk) {
  return cfg.estimator == TeEstimator::kGaussian ? gk->te(x) : bk->te(x);
}

}  // namespace detail

/// Surrogate significance of TE(x -> y at lag) with an explicitly chosen
/// random stream. Each surrogate replaces x by a circular shift of itself
/// (offset uniform in [T/10, 9T/10]), preserving the source's
/// autocorrelation under the null.
/// Returns p = (1 + #{TE_surr >= TE_obs}) / (1 + n_surrogates) and, when
/// te_out is given, the observed TE.
inline double surrogate_pvalue_stream(std::span<const double> x,
                                      std::span<const double> y, int lag,
                                      const FilterConfig& cfg,
                                      std::uint64_t stream_seed,
                                      double* te_out = nullptr) {
  cfg.validate();
  if (lag < cfg.tau_min || lag > cfg.tau_max)
    throw Error("surrogate test: lag outside [tau_min, tau_max]");
  const std::size_t t = x.size();

  detail::GaussianTeKernel* gk = nullptr;
  detail::BinnedTeKernel* bk = nullptr;
  std::optional<detail::GaussianTeKernel> gauss;
  std::optional<detail::BinnedTeKernel> binned;
  if (cfg.estimator == TeEstimator::kGaussian) {
    gauss.emplace(y, lag, cfg.k);
    gk = &*gauss;
  } else {
    binned.emplace(y, lag, cfg.k, cfg.bins);
    bk = &*binned;
  }

  const double te_obs = detail::observed_te(cfg, x, gk, bk);
  if (te_out) *te_out = te_obs;

  Rng rng(stream_seed);
  const std::int64_t lo = static_cast<std::int64_t>(t / 10);
  const std::int64_t hi = static_cast<std::int64_t>(9 * t / 10);
  int exceed = 0;
  for (int s = 0; s < cfg.n_surrogates; ++s) {
    const auto shift = static_cast<std::size_t>(rng.uniform_int(lo, hi));
    const double te_surr = (cfg.estimator == TeEstimator::kGaussian)
                               ? gk->te_circular(x, shift)
                               : bk->te_circular(x, shift);
    if (te_surr >= te_obs) ++exceed;
  }
  return static_cast<double>(1 + exceed) / static_cast<double>(1 + cfg.n_surrogates);
}

/// Surrogate significance of TE(x -> y at lag) using cfg.seed for the
/// surrogate offsets. Deterministic given the seed.
inline double surrogate_pvalue(std::span<const double> x, std::span<const double> y,
                               int lag, const FilterConfig& cfg) {
  return surrogate_pvalue_stream(x, y, lag, cfg, cfg.seed);
}

/// Transfer-entropy feature selection over a dataset.
///
/// Every ordered pair (X, Y), X != Y, is tested at every lag in
/// [tau_min, tau_max]; a link is accepted iff its surrogate p-value is
/// <= alpha_filter. A variable is selected iff it participates in at least
/// one accepted cross link or is protected; everything else is rejected.
/// Selected variables additionally receive autodependency candidates at all
/// lags (never tested, always included; stored with te = 0, p_value = 0).
///
/// Each (source, target, lag) task derives its surrogate stream from the
/// variable names, so results are independent of worker count and of any
/// columns excluded from the dataset.
inline FilterResult select_features(const TimeSeriesDataset& ds, const FilterConfig& cfg,
                                    int n_threads = 1) {
  cfg.validate();
  const std::size_t n = ds.n_vars();
  if (ds.n_samples() <= static_cast<std::size_t>(cfg.tau_max) + kMinSamples)
    throw Error("select_features: dataset too short for tau_max = " +
                std::to_string(cfg.tau_max) + ": need T > " +
                std::to_string(cfg.tau_max + kMinSamples));
  for (const auto& name : cfg.protected_vars)
    if (!ds.has_variable(name))
      throw Error("select_features: protected variable '" + name + "' not in dataset");

  struct Task {
    std::size_t source;
    std::size_t target;
    int lag;
  };
  std::vector<Task> tasks;
  const int n_lags = cfg.tau_max - cfg.tau_min + 1;
  tasks.reserve(n * (n - 1) * static_cast<std::size_t>(n_lags));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      for (int lag = cfg.tau_min; lag <= cfg.tau_max; ++lag)
        tasks.push_back({i, j, lag});
    }

  std::vector<CandidateLink> scored(tasks.size());
  parallel_for(tasks.size(), n_threads, [&](std::size_t idx) {
    const Task& task = tasks[idx];
    const std::uint64_t stream =
        derive_stream(cfg.seed, fnv1a64(ds.names()[task.source]),
                      fnv1a64(ds.names()[task.target]),
                      static_cast<std::uint64_t>(task.lag));
    double te = 0.0;
    const double p = surrogate_pvalue_stream(ds.column(task.source), ds.column(task.target),
                                             task.lag, cfg, stream, &te);
    scored[idx] = {ds.names()[task.source], ds.names()[task.target], task.lag, te, p};
  });

  std::vector<bool> participates(n, false);
  std::vector<CandidateLink> accepted;
  for (std::size_t idx = 0; idx < tasks.size(); ++idx) {
    if (scored[idx].p_value <= cfg.alpha_filter) {
      accepted.push_back(scored[idx]);
      participates[tasks[idx].source] = true;
      participates[tasks[idx].target] = true;
    }
  }

  FilterResult result;
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_protected =
        std::find(cfg.protected_vars.begin(), cfg.protected_vars.end(), ds.names()[i]) !=
        cfg.protected_vars.end();
    if (participates[i] || is_protected)
      result.selected.push_back(ds.names()[i]);
    else
      result.rejected.push_back(ds.names()[i]);
  }

  result.candidates = std::move(accepted);
  for (const auto& name : result.selected)
    for (int lag = cfg.tau_min; lag <= cfg.tau_max; ++lag)
      result.candidates.push_back({name, name, lag, 0.0, 0.0});

  std::sort(result.candidates.begin(), result.candidates.end(),
            [&](const CandidateLink& a, const CandidateLink& b) {
              const auto ka = std::make_tuple(ds.index_of(a.source), ds.index_of(a.target), a.lag);
              const auto kb = std::make_tuple(ds.index_of(b.source), ds.index_of(b.target), b.lag);
              return ka < kb;
            });
  return result;
}

}  // namespace tscausal
