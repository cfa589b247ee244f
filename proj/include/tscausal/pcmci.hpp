#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tscausal/ci_test.hpp"
#include "tscausal/dataset.hpp"
#include "tscausal/error.hpp"
#include "tscausal/parallel.hpp"
#include "tscausal/te_filter.hpp"

namespace tscausal {

/// Tuning surface of the discovery engine. alpha_pc gates the (deliberately
/// liberal) PC1 condition-selection phase, alpha the final MCI edges.
struct DiscoveryConfig {
  int tau_min = 1;
  int tau_max = 1;
  double alpha_pc = 0.05;
  double alpha = 0.05;
  int max_conds_dim = 3;                 // PC1 conditioning-set cap (p_max)
  std::optional<int> max_parents;        // optional per-target cap
  bool fdr_bh = false;                   // Benjamini-Hochberg on MCI p-values
  std::uint64_t seed = 0;

  void validate() const {
    if (tau_min < 1) throw Error("discovery config: tau_min must be >= 1");
    if (tau_max < tau_min) throw Error("discovery config: tau_max must be >= tau_min");
    if (!(alpha_pc > 0.0 && alpha_pc < 1.0))
      throw Error("discovery config: alpha_pc must be in (0,1)");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw Error("discovery config: alpha must be in (0,1)");
    if (max_conds_dim < 0) throw Error("discovery config: max_conds_dim must be >= 0");
    if (max_parents && *max_parents < 1)
      throw Error("discovery config: max_parents must be >= 1");
  }
};

/// A directed lagged edge of the output model: source(t-lag) -> target(t).
struct LaggedEdge {
  std::string source;
  std::string target;
  int lag = 1;
  double statistic = 0.0;
  double p_value = 0.0;
};

struct RunStats {
  long ci_tests = 0;
  double duration_s = 0.0;
};

/// The discovered causal model. All edges point forward in time (lag >= 1),
/// so the graph over lagged nodes is acyclic by construction.
struct LaggedGraph {
  std::vector<std::string> variables;
  std::vector<LaggedEdge> edges;
  DiscoveryConfig config_echo;
  RunStats stats;
};

/// Condition-selection output for one target: lagged parents with their
/// minimum absolute partial correlation across PC1 iterations, strongest
/// first.
struct ParentSet {
  struct Entry {
    std::string source;
    int lag = 1;
    double score = 0.0;
  };
  std::string target;
  std::vector<Entry> parents;
};

namespace detail {

/// Materialized lag slices over one shared alignment window. The first
/// `offset` rows are dropped once per run so every test in both phases uses
/// the same effective sample count (comparable dof across tests).
class LagView {
 public:
  LagView(const TimeSeriesDataset& ds, int offset)
      : n_vars_(ds.n_vars()), offset_(offset) {
    if (ds.n_samples() <= static_cast<std::size_t>(offset) + kMinSamples)
      throw Error("discovery: dataset too short: need T > " +
                  std::to_string(offset + kMinSamples) + " for tau_max and MCI conditioning");
    n_eff_ = ds.n_samples() - static_cast<std::size_t>(offset);
    slices_.resize(n_vars_ * static_cast<std::size_t>(offset + 1));
    for (std::size_t v = 0; v < n_vars_; ++v) {
      const auto col = ds.column(v);
      for (int lag = 0; lag <= offset; ++lag) {
        auto& s = slices_[v * static_cast<std::size_t>(offset + 1) + lag];
        s.resize(n_eff_);
        for (std::size_t i = 0; i < n_eff_; ++i)
          s[i] = col[static_cast<std::size_t>(offset) + i - lag];
      }
    }
  }

  std::span<const double> slice(std::size_t var, int lag) const {
    return slices_[var * static_cast<std::size_t>(offset_ + 1) + lag];
  }

  std::size_t effective_samples() const { return n_eff_; }
  int max_lag() const { return offset_; }

 private:
  std::size_t n_vars_;
  int offset_;
  std::size_t n_eff_;
  std::vector<std::vector<double>> slices_;
};

struct IndexedParent {
  std::size_t source;
  int lag;
  double score;
};

struct Pc1Outcome {
  std::vector<IndexedParent> parents;
  long tests = 0;
};

/// Iterative PC1 for one target. At pass q each remaining parent is tested
/// conditioning on the q currently strongest other parents; parents with
/// p > alpha_pc after a full pass are removed. Stops when a pass removes
/// nothing or q exceeds min(max_conds_dim, |parents|-1). A parent's score
/// is its minimum |statistic| across passes.
inline Pc1Outcome pc1_single_target(const LagView& view, std::size_t target,
                                    std::vector<IndexedParent> parents,
                                    const DiscoveryConfig& cfg,
                                    const std::vector<std::string>& names) {
  Pc1Outcome out;
  const auto order_key = [](const IndexedParent& p) {
    return std::make_tuple(-p.score, p.source, p.lag);
  };

  int q = 0;
  while (!parents.empty()) {
    const int cap = std::min<int>(cfg.max_conds_dim, static_cast<int>(parents.size()) - 1);
    if (q > cap) break;

    std::sort(parents.begin(), parents.end(),
              [&](const IndexedParent& a, const IndexedParent& b) {
                return order_key(a) < order_key(b);
              });

    std::vector<bool> remove(parents.size(), false);
    for (std::size_t pi = 0; pi < parents.size(); ++pi) {
      std::vector<std::span<const double>> conds;
      std::vector<std::string> cond_names;
      conds.reserve(q);
      for (std::size_t ci = 0; ci < parents.size() && conds.size() < static_cast<std::size_t>(q); ++ci) {
        if (ci == pi) continue;
        conds.push_back(view.slice(parents[ci].source, parents[ci].lag));
        cond_names.push_back(names[parents[ci].source] + "@-" + std::to_string(parents[ci].lag));
      }
      const CITestResult res =
          parcorr_test(view.slice(parents[pi].source, parents[pi].lag),
                       view.slice(target, 0), conds, cond_names);
      ++out.tests;
      parents[pi].score = std::min(parents[pi].score, std::abs(res.statistic));
      if (res.p_value > cfg.alpha_pc) remove[pi] = true;
    }

    std::vector<IndexedParent> kept;
    kept.reserve(parents.size());
    for (std::size_t pi = 0; pi < parents.size(); ++pi)
      if (!remove[pi]) kept.push_back(parents[pi]);
    const bool removed_any = kept.size() != parents.size();
    parents = std::move(kept);
    if (!removed_any) break;
    ++q;
  }

  std::sort(parents.begin(), parents.end(),
            [&](const IndexedParent& a, const IndexedParent& b) {
              return order_key(a) < order_key(b);
            });
  if (cfg.max_parents && parents.size() > static_cast<std::size_t>(*cfg.max_parents))
    parents.resize(static_cast<std::size_t>(*cfg.max_parents));
  out.parents = std::move(parents);
  return out;
}

/// Benjamini-Hochberg acceptance threshold for m hypotheses at level alpha;
/// returns -1 when nothing is accepted.
inline double bh_threshold(std::vector<double> pvalues, double alpha) {
  std::sort(pvalues.begin(), pvalues.end());
  const double m = static_cast<double>(pvalues.size());
  double threshold = -1.0;
  for (std::size_t i = 0; i < pvalues.size(); ++i) {
    if (pvalues[i] <= alpha * static_cast<double>(i + 1) / m) threshold = pvalues[i];
  }
  return threshold;
}

}  // namespace detail

/// PC1 condition selection for a single target over an explicit candidate
/// set of (source name, lag) pairs. n_tests, when given, accumulates the
/// number of CI tests executed.
inline ParentSet pc1_parents(const TimeSeriesDataset& ds, const std::string& target,
                             const std::vector<std::pair<std::string, int>>& candidates,
                             const DiscoveryConfig& cfg, long* n_tests = nullptr) {
  cfg.validate();
  const detail::LagView view(ds, 2 * cfg.tau_max);
  const std::size_t target_idx = ds.index_of(target);

  std::vector<detail::IndexedParent> initial;
  std::set<std::pair<std::size_t, int>> seen;
  for (const auto& [source, lag] : candidates) {
    if (lag < cfg.tau_min || lag > cfg.tau_max)
      throw Error("pc1_parents: candidate lag " + std::to_string(lag) +
                  " outside [tau_min, tau_max]");
    const std::size_t si = ds.index_of(source);
    if (seen.insert({si, lag}).second)
      initial.push_back({si, lag, std::numeric_limits<double>::infinity()});
  }

  auto outcome = detail::pc1_single_target(view, target_idx, std::move(initial), cfg, ds.names());
  if (n_tests) *n_tests += outcome.tests;

  ParentSet result;
  result.target = target;
  for (const auto& p : outcome.parents)
    result.parents.push_back({ds.names()[p.source], p.lag, p.score});
  return result;
}

/// MCI phase: every link (X, tau, Y) present in a ParentSet is tested with
/// parcorr conditioning on parents(Y) \ {(X,tau)} together with parents(X)
/// shifted back by tau; edges with p <= alpha (or within the BH threshold
/// when enabled) are kept.
inline LaggedGraph mci_links(const TimeSeriesDataset& ds,
                             const std::map<std::string, ParentSet>& parent_sets,
                             const DiscoveryConfig& cfg, long* n_tests = nullptr,
                             int n_threads = 1) {
  cfg.validate();
  for (const auto& name : ds.names())
    if (!parent_sets.count(name))
      throw Error("mci_links: no parent set for variable '" + name + "'");

  const detail::LagView view(ds, 2 * cfg.tau_max);

  struct LinkTask {
    std::size_t source;
    std::size_t target;
    int lag;
  };
  std::vector<LinkTask> links;
  for (std::size_t j = 0; j < ds.n_vars(); ++j) {
    const ParentSet& ps = parent_sets.at(ds.names()[j]);
    for (const auto& parent : ps.parents)
      links.push_back({ds.index_of(parent.source), j, parent.lag});
  }
  std::sort(links.begin(), links.end(), [](const LinkTask& a, const LinkTask& b) {
    return std::make_tuple(a.target, a.source, a.lag) <
           std::make_tuple(b.target, b.source, b.lag);
  });

  std::vector<CITestResult> results(links.size());
  parallel_for(links.size(), n_threads, [&](std::size_t li) {
    const LinkTask& link = links[li];
    // Conditioning set: parents of the target (minus the tested link) plus
    // parents of the source shifted back by the link lag, deduplicated.
    std::set<std::pair<std::size_t, int>> conds;
    for (const auto& p : parent_sets.at(ds.names()[link.target]).parents) {
      const std::size_t si = ds.index_of(p.source);
      if (si == link.source && p.lag == link.lag) continue;
      conds.insert({si, p.lag});
    }
    for (const auto& p : parent_sets.at(ds.names()[link.source]).parents)
      conds.insert({ds.index_of(p.source), p.lag + link.lag});
    conds.erase({link.source, link.lag});

    std::vector<std::span<const double>> z;
    std::vector<std::string> z_names;
    z.reserve(conds.size());
    for (const auto& [v, l] : conds) {
      z.push_back(view.slice(v, l));
      z_names.push_back(ds.names()[v] + "@-" + std::to_string(l));
    }
    results[li] = parcorr_test(view.slice(link.source, link.lag),
                               view.slice(link.target, 0), z, z_names);
  });
  if (n_tests) *n_tests += static_cast<long>(links.size());

  double accept_threshold = cfg.alpha;
  if (cfg.fdr_bh) {
    std::vector<double> pvalues;
    pvalues.reserve(results.size());
    for (const auto& r : results) pvalues.push_back(r.p_value);
    accept_threshold = detail::bh_threshold(std::move(pvalues), cfg.alpha);
  }

  LaggedGraph graph;
  graph.variables = ds.names();
  graph.config_echo = cfg;
  for (std::size_t li = 0; li < links.size(); ++li) {
    if (results[li].p_value <= accept_threshold) {
      graph.edges.push_back({ds.names()[links[li].source], ds.names()[links[li].target],
                             links[li].lag, results[li].statistic, results[li].p_value});
    }
  }
  graph.stats.ci_tests = static_cast<long>(links.size());
  return graph;
}

/// Full PCMCI: PC1 per target followed by MCI over the surviving links.
///
/// Without a FilterResult the initial candidate set of every target is all
/// (source, lag) pairs (baseline PCMCI). With one, the dataset is restricted
/// to the selected variables and each target starts from exactly the
/// accepted candidate links into it plus its autodependencies.
inline LaggedGraph run_pcmci(const TimeSeriesDataset& ds, const DiscoveryConfig& cfg,
                             const FilterResult* candidates = nullptr, int n_threads = 1) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();

  std::optional<TimeSeriesDataset> restricted;
  const TimeSeriesDataset* work = &ds;
  if (candidates) {
    for (const auto& name : candidates->selected)
      if (!ds.has_variable(name))
        throw Error("run_pcmci: candidate set references unknown variable '" + name + "'");
    for (const auto& link : candidates->candidates)
      if (!ds.has_variable(link.source) || !ds.has_variable(link.target))
        throw Error("run_pcmci: candidate link references unknown variable '" +
                    (ds.has_variable(link.source) ? link.target : link.source) + "'");
    if (candidates->selected.empty()) {
      LaggedGraph graph;
      graph.config_echo = cfg;
      return graph;
    }
    restricted.emplace(ds.select(candidates->selected));
    work = &*restricted;
  }

  const detail::LagView view(*work, 2 * cfg.tau_max);
  const std::size_t n = work->n_vars();

  std::vector<std::vector<detail::IndexedParent>> initial(n);
  if (!candidates) {
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i)
        for (int lag = cfg.tau_min; lag <= cfg.tau_max; ++lag)
          initial[j].push_back({i, lag, std::numeric_limits<double>::infinity()});
  } else {
    std::vector<std::set<std::pair<std::size_t, int>>> sets(n);
    for (const auto& link : candidates->candidates) {
      if (link.lag < cfg.tau_min || link.lag > cfg.tau_max)
        throw Error("run_pcmci: candidate lag " + std::to_string(link.lag) +
                    " outside [tau_min, tau_max]");
      sets[work->index_of(link.target)].insert({work->index_of(link.source), link.lag});
    }
    for (std::size_t j = 0; j < n; ++j) {
      for (int lag = cfg.tau_min; lag <= cfg.tau_max; ++lag) sets[j].insert({j, lag});
      for (const auto& [src, lag] : sets[j])
        initial[j].push_back({src, lag, std::numeric_limits<double>::infinity()});
    }
  }

  std::vector<detail::Pc1Outcome> pc1(n);
  parallel_for(n, n_threads, [&](std::size_t j) {
    pc1[j] = detail::pc1_single_target(view, j, initial[j], cfg, work->names());
  });

  long total_tests = 0;
  std::map<std::string, ParentSet> parent_sets;
  for (std::size_t j = 0; j < n; ++j) {
    total_tests += pc1[j].tests;
    ParentSet ps;
    ps.target = work->names()[j];
    for (const auto& p : pc1[j].parents)
      ps.parents.push_back({work->names()[p.source], p.lag, p.score});
    parent_sets.emplace(ps.target, std::move(ps));
  }

  long mci_tests = 0;
  LaggedGraph graph = mci_links(*work, parent_sets, cfg, &mci_tests, n_threads);
  total_tests += mci_tests;

  graph.stats.ci_tests = total_tests;
  graph.stats.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return graph;
}

/// Stats of the filter stage of an F-PCMCI run.
struct FilterStats {
  long te_tests = 0;
  double duration_s = 0.0;
};

struct FpcmciResult {
  FilterResult filter;
  LaggedGraph graph;
  FilterStats filter_stats;
  std::vector<std::string> warnings;
};

/// F-PCMCI: the transfer-entropy filter followed by PCMCI restricted to the
/// filter's hypothetical model. Filter and discovery must share lag bounds.
inline FpcmciResult run_fpcmci(const TimeSeriesDataset& ds, const FilterConfig& fcfg,
                               const DiscoveryConfig& dcfg, int n_threads = 1) {
  fcfg.validate();
  dcfg.validate();
  if (fcfg.tau_min != dcfg.tau_min || fcfg.tau_max != dcfg.tau_max)
    throw Error("run_fpcmci: filter and discovery lag ranges must match");

  FpcmciResult result;
  const auto t_start = std::chrono::steady_clock::now();
  result.filter = select_features(ds, fcfg, n_threads);
  result.filter_stats.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  const std::size_t n = ds.n_vars();
  result.filter_stats.te_tests =
      static_cast<long>(n * (n - 1)) * static_cast<long>(fcfg.tau_max - fcfg.tau_min + 1);

  if (result.filter.selected.empty())
    result.warnings.push_back("filter rejected all variables; graph is empty");
  result.graph = run_pcmci(ds, dcfg, &result.filter, n_threads);
  return result;
}

}  // namespace tscausal
