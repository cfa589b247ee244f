#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "tscausal/error.hpp"
#include "tscausal/pcmci.hpp"
#include "tscausal/synth.hpp"
#include "tscausal/te_filter.hpp"

namespace tscausal {

using json = nlohmann::json;

inline json filter_result_to_json(const FilterResult& result) {
  json j;
  j["selected"] = result.selected;
  j["rejected"] = result.rejected;
  j["candidates"] = json::array();
  for (const auto& c : result.candidates) {
    j["candidates"].push_back({{"source", c.source},
                               {"target", c.target},
                               {"lag", c.lag},
                               {"te", c.te},
                               {"p_value", c.p_value}});
  }
  return j;
}

inline FilterResult filter_result_from_json(const json& j) {
  try {
    FilterResult result;
    result.selected = j.at("selected").get<std::vector<std::string>>();
    result.rejected = j.at("rejected").get<std::vector<std::string>>();
    for (const auto& c : j.at("candidates")) {
      result.candidates.push_back({c.at("source").get<std::string>(),
                                   c.at("target").get<std::string>(),
                                   c.at("lag").get<int>(), c.at("te").get<double>(),
                                   c.at("p_value").get<double>()});
    }
    return result;
  } catch (const json::exception& e) {
    throw Error(std::string("filter result JSON: ") + e.what());
  }
}

inline json graph_to_json(const LaggedGraph& graph) {
  json j;
  j["variables"] = graph.variables;
  j["edges"] = json::array();
  for (const auto& e : graph.edges) {
    j["edges"].push_back({{"source", e.source},
                          {"target", e.target},
                          {"lag", e.lag},
                          {"statistic", e.statistic},
                          {"p_value", e.p_value}});
  }
  j["stats"] = {{"ci_tests", graph.stats.ci_tests}, {"duration_s", graph.stats.duration_s}};
  return j;
}

inline LaggedGraph graph_from_json(const json& j) {
  try {
    LaggedGraph graph;
    graph.variables = j.at("variables").get<std::vector<std::string>>();
    for (const auto& e : j.at("edges")) {
      graph.edges.push_back({e.at("source").get<std::string>(),
                             e.at("target").get<std::string>(), e.at("lag").get<int>(),
                             e.at("statistic").get<double>(),
                             e.at("p_value").get<double>()});
    }
    if (j.contains("stats")) {
      graph.stats.ci_tests = j["stats"].value("ci_tests", 0L);
      graph.stats.duration_s = j["stats"].value("duration_s", 0.0);
    }
    return graph;
  } catch (const json::exception& e) {
    throw Error(std::string("graph JSON: ") + e.what());
  }
}

/// DOT rendering of a lagged graph: one node per variable, one edge per
/// lagged link labelled "lag=tau (statistic)"; multiple lags between the
/// same pair become parallel edges.
inline std::string graph_to_dot(const LaggedGraph& graph) {
  std::string out = "digraph causal_model {\n  rankdir=LR;\n";
  for (const auto& name : graph.variables) out += "  \"" + name + "\";\n";
  for (const auto& e : graph.edges) {
    char label[64];
    std::snprintf(label, sizeof(label), "lag=%d (%.2f)", e.lag, e.statistic);
    out += "  \"" + e.source + "\" -> \"" + e.target + "\" [label=\"" + label + "\"];\n";
  }
  out += "}\n";
  return out;
}

inline json scm_spec_to_json(const SCMSpec& spec) {
  json j;
  j["n_vars"] = spec.n_vars;
  j["names"] = spec.names;
  j["noise_std"] = spec.noise_std;
  j["terms"] = json::array();
  for (int target = 0; target < spec.n_vars; ++target)
    for (const auto& term : spec.terms[target]) {
      j["terms"].push_back({{"source", spec.names[term.source]},
                            {"target", spec.names[target]},
                            {"lag", term.lag},
                            {"coef", term.coef}});
    }
  return j;
}

inline json truth_to_json(const std::vector<std::string>& variables,
                          const std::set<LinkTriple>& truth) {
  json j;
  j["variables"] = variables;
  j["links"] = json::array();
  for (const auto& link : truth)
    j["links"].push_back(
        {{"source", link.source}, {"target", link.target}, {"lag", link.lag}});
  return j;
}

inline std::set<LinkTriple> truth_from_json(const json& j) {
  try {
    std::set<LinkTriple> truth;
    for (const auto& link : j.at("links"))
      truth.insert({link.at("source").get<std::string>(),
                    link.at("target").get<std::string>(), link.at("lag").get<int>()});
    return truth;
  } catch (const json::exception& e) {
    throw Error(std::string("truth JSON: ") + e.what());
  }
}

inline json metrics_to_json(const Metrics& m) {
  return json{{"precision", m.precision}, {"recall", m.recall},     {"f1", m.f1},
              {"shd", m.shd},             {"ci_tests", m.ci_tests}, {"duration_s", m.duration_s}};
}

inline std::string metrics_csv_header() {
  return "precision,recall,f1,shd,ci_tests,duration_s";
}

inline std::string metrics_csv_row(const Metrics& m) {
  return detail::format_double(m.precision) + "," + detail::format_double(m.recall) + "," +
         detail::format_double(m.f1) + "," + std::to_string(m.shd) + "," +
         std::to_string(m.ci_tests) + "," + detail::format_double(m.duration_s);
}

}  // namespace tscausal
