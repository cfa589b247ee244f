#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tscausal/dataset.hpp"
#include "tscausal/error.hpp"
#include "tscausal/pcmci.hpp"
#include "tscausal/rng.hpp"

namespace tscausal {

/// One linear structural term: target(t) += coef * source(t - lag).
struct ScmTerm {
  int source = 0;
  int lag = 1;
  double coef = 0.0;
};

/// Ground-truth linear SCM over variables X0..X{n-1} with independent
/// Gaussian noise. Stationarity invariant: the companion matrix of the
/// implied VAR has spectral radius < 0.95.
struct SCMSpec {
  int n_vars = 0;
  std::vector<std::vector<ScmTerm>> terms;  // per target
  std::vector<double> noise_std;
  std::vector<std::string> names;

  int max_lag() const {
    int p = 1;
    for (const auto& target_terms : terms)
      for (const auto& term : target_terms) p = std::max(p, term.lag);
    return p;
  }
};

/// A directed lagged ground-truth link, comparable for set storage.
struct LinkTriple {
  std::string source;
  std::string target;
  int lag = 1;

  auto operator<=>(const LinkTriple&) const = default;
};

/// Link-recovery scores of a predicted graph against ground truth, plus the
/// cost counters of the discovery run that produced it.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long shd = 0;
  long ci_tests = 0;
  double duration_s = 0.0;
};

/// Spectral radius of the VAR companion matrix implied by the spec.
inline double companion_spectral_radius(const SCMSpec& spec) {
  const int n = spec.n_vars;
  const int p = spec.max_lag();
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n * p, n * p);
  for (int j = 0; j < n; ++j)
    for (const auto& term : spec.terms[j])
      companion(j, (term.lag - 1) * n + term.source) += term.coef;
  for (int block = 1; block < p; ++block)
    for (int i = 0; i < n; ++i) companion(block * n + i, (block - 1) * n + i) = 1.0;
  const Eigen::VectorXcd eigenvalues = companion.eigenvalues();
  double radius = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    radius = std::max(radius, std::abs(eigenvalues(i)));
  return radius;
}

/// Random linear SCM: each ordered pair (i -> j) receives a link with the
/// given probability at a uniform lag in [1, tau_max] and coefficient
/// uniform in +-[0.3, 0.8]; every variable gets a lag-1 autodependency with
/// coefficient in [0.3, 0.6]. All coefficients are scaled down by 0.9 until
/// the companion spectral radius drops below 0.95. Deterministic in seed.
inline SCMSpec random_scm(int n_vars, double density, int tau_max, std::uint64_t seed) {
  if (n_vars < 2) throw Error("random_scm: n_vars must be >= 2");
  if (!(density > 0.0 && density <= 1.0))
    throw Error("random_scm: density must be in (0, 1]");
  if (tau_max < 1) throw Error("random_scm: tau_max must be >= 1");

  SCMSpec spec;
  spec.n_vars = n_vars;
  spec.terms.resize(n_vars);
  spec.noise_std.assign(n_vars, 1.0);
  for (int i = 0; i < n_vars; ++i) spec.names.push_back("X" + std::to_string(i));

  Rng rng(derive_stream(seed, 0x73636D /* "scm" */));
  for (int j = 0; j < n_vars; ++j) {
    for (int i = 0; i < n_vars; ++i) {
      if (i == j) continue;
      if (rng.uniform01() < density) {
        const int lag = static_cast<int>(rng.uniform_int(1, tau_max));
        const double magnitude = rng.uniform(0.3, 0.8);
        const double sign = rng.uniform01() < 0.5 ? 1.0 : -1.0;
        spec.terms[j].push_back({i, lag, sign * magnitude});
      }
    }
    spec.terms[j].push_back({j, 1, rng.uniform(0.3, 0.6)});
  }

  while (companion_spectral_radius(spec) >= 0.95) {
    for (auto& target_terms : spec.terms)
      for (auto& term : target_terms) term.coef *= 0.9;
  }
  return spec;
}

struct SimulationResult {
  TimeSeriesDataset data;
  std::set<LinkTriple> ground_truth;
};

/// Iterates the structural equations with independent Gaussian noise,
/// discarding a 200-step burn-in. Ground truth is exactly the spec's terms.
inline SimulationResult simulate(const SCMSpec& spec, int n_samples, std::uint64_t seed) {
  if (n_samples < 100) throw Error("simulate: samples must be >= 100");
  constexpr int kBurnIn = 200;
  const int total = n_samples + kBurnIn;
  const int n = spec.n_vars;

  std::vector<std::vector<double>> values(n, std::vector<double>(total, 0.0));
  Rng rng(derive_stream(seed, 0x73696D /* "sim" */));
  for (int t = 0; t < total; ++t) {
    for (int j = 0; j < n; ++j) {
      double v = spec.noise_std[j] * rng.normal();
      for (const auto& term : spec.terms[j]) {
        if (t >= term.lag) v += term.coef * values[term.source][t - term.lag];
      }
      if (!(std::abs(v) < 1e9))
        throw Error("simulate: values diverged (non-stationary model) at step " +
                    std::to_string(t));
      values[j][t] = v;
    }
  }

  std::vector<std::vector<double>> columns(n);
  for (int j = 0; j < n; ++j)
    columns[j].assign(values[j].begin() + kBurnIn, values[j].end());

  std::set<LinkTriple> truth;
  for (int j = 0; j < n; ++j)
    for (const auto& term : spec.terms[j])
      truth.insert({spec.names[term.source], spec.names[j], term.lag});

  return {TimeSeriesDataset(spec.names, std::move(columns)), std::move(truth)};
}

/// Appends pure-noise (standard normal, causally disconnected) columns named
/// <prefix>0.. to a dataset. Used to benchmark the filter's exclusions.
inline TimeSeriesDataset add_noise_columns(const TimeSeriesDataset& ds, int count,
                                           std::uint64_t seed,
                                           const std::string& prefix = "D") {
  std::vector<std::string> names = ds.names();
  std::vector<std::vector<double>> columns;
  columns.reserve(ds.n_vars() + count);
  for (std::size_t j = 0; j < ds.n_vars(); ++j) {
    const auto col = ds.column(j);
    columns.emplace_back(col.begin(), col.end());
  }
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_stream(seed, 0x6E6F697365 /* "noise" */, static_cast<std::uint64_t>(i)));
    std::vector<double> col(ds.n_samples());
    for (auto& v : col) v = rng.normal();
    names.push_back(prefix + std::to_string(i));
    columns.push_back(std::move(col));
  }
  return TimeSeriesDataset(std::move(names), std::move(columns), ds.dt());
}

/// Precision/recall/F1 and structural Hamming distance over exact
/// (source, target, lag) triple matches; cost counters are copied from the
/// discovery run's stats.
inline Metrics evaluate_graph(const LaggedGraph& predicted,
                              const std::set<LinkTriple>& truth) {
  std::set<LinkTriple> pred;
  for (const auto& e : predicted.edges) pred.insert({e.source, e.target, e.lag});

  long tp = 0;
  for (const auto& link : pred) tp += truth.count(link) ? 1 : 0;
  const long fp = static_cast<long>(pred.size()) - tp;
  const long fn = static_cast<long>(truth.size()) - tp;

  Metrics m;
  if (!pred.empty())
    m.precision = static_cast<double>(tp) / static_cast<double>(pred.size());
  else
    m.precision = truth.empty() ? 1.0 : 0.0;
  m.recall = truth.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(truth.size());
  m.f1 = (m.precision + m.recall > 0.0)
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.shd = fp + fn;
  m.ci_tests = predicted.stats.ci_tests;
  m.duration_s = predicted.stats.duration_s;
  return m;
}

}  // namespace tscausal
