#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tscausal/error.hpp"
#include "tscausal/stats.hpp"

namespace tscausal {

inline constexpr std::size_t kMinSamples = 10;

/// Named, uniformly sampled multivariate time series. Immutable after
/// construction; safe to share read-only across worker threads.
///
/// Invariants enforced on construction: unique non-empty variable names,
/// all columns of equal length T >= 10, every value finite.
class TimeSeriesDataset {
 public:
  TimeSeriesDataset(std::vector<std::string> names,
                    std::vector<std::vector<double>> columns,
                    std::optional<double> dt = std::nullopt)
      : names_(std::move(names)), columns_(std::move(columns)), dt_(dt) {
    validate();
  }

  const std::vector<std::string>& names() const { return names_; }
  std::size_t n_vars() const { return names_.size(); }
  std::size_t n_samples() const { return columns_.empty() ? 0 : columns_[0].size(); }
  std::optional<double> dt() const { return dt_; }

  std::span<const double> column(std::size_t i) const { return columns_[i]; }

  std::span<const double> column(std::string_view name) const {
    return columns_[index_of(name)];
  }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    throw Error("unknown variable '" + std::string(name) + "'");
  }

  bool has_variable(std::string_view name) const {
    return std::any_of(names_.begin(), names_.end(),
                       [&](const std::string& n) { return n == name; });
  }

  /// Column subset in the order given. All names must exist.
  TimeSeriesDataset select(const std::vector<std::string>& keep) const {
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols;
    names.reserve(keep.size());
    cols.reserve(keep.size());
    for (const auto& name : keep) {
      const std::size_t i = index_of(name);
      names.push_back(names_[i]);
      cols.push_back(columns_[i]);
    }
    return TimeSeriesDataset(std::move(names), std::move(cols), dt_);
  }

  /// Returns a copy with every column rescaled to sample mean 0 and sample
  /// standard deviation 1 (n-1 denominator). A near-constant column is an
  /// error: a constant signal carries no causal information.
  TimeSeriesDataset standardize() const {
    std::vector<std::vector<double>> cols(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      const auto& src = columns_[j];
      const double m = mean(src);
      const double sd = sample_std(src);
      if (sd <= 1e-12)
        throw Error("standardize: zero variance in " + names_[j]);
      cols[j].resize(src.size());
      for (std::size_t t = 0; t < src.size(); ++t) cols[j][t] = (src[t] - m) / sd;
    }
    return TimeSeriesDataset(names_, std::move(cols), dt_);
  }

  static TimeSeriesDataset load_csv(const std::string& path);
  void save_csv(const std::string& path) const;
  void write_csv(std::ostream& out) const;

 private:
  void validate() const {
    if (names_.empty()) throw Error("dataset: no variables");
    if (names_.size() != columns_.size())
      throw Error("dataset: names/columns size mismatch");
    std::unordered_set<std::string> seen;
    for (const auto& name : names_) {
      if (name.empty()) throw Error("dataset: empty variable name");
      if (!seen.insert(name).second)
        throw Error("dataset: duplicate variable name '" + name + "'");
    }
    const std::size_t t = columns_[0].size();
    if (t < kMinSamples) {
      throw Error("dataset: need at least " + std::to_string(kMinSamples) +
                  " samples, got " + std::to_string(t));
    }
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (columns_[j].size() != t)
        throw Error("dataset: column '" + names_[j] + "' has " +
                    std::to_string(columns_[j].size()) + " samples, expected " +
                    std::to_string(t));
      for (std::size_t i = 0; i < t; ++i) {
        if (!std::isfinite(columns_[j][i]))
          throw Error("dataset: non-finite value in '" + names_[j] +
                      "' at sample " + std::to_string(i));
      }
    }
    if (dt_ && *dt_ <= 0.0) throw Error("dataset: dt must be positive");
  }

  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::optional<double> dt_;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return fields;
}

inline bool parse_double(const std::string& token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;  // from_chars rejects leading '+'
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Reads a dataset from CSV: UTF-8, comma separated, '.' decimal point,
/// first row a header of variable names, one sample per row, oldest first.
/// Parse and validation errors name the offending row and column.
inline TimeSeriesDataset TimeSeriesDataset::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty file");
  // Strip a UTF-8 BOM if present.
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const std::vector<std::string> header = detail::split_csv_line(line);
  const std::size_t n = header.size();
  {
    std::unordered_set<std::string> seen;
    for (std::size_t j = 0; j < n; ++j) {
      if (header[j].empty())
        throw Error(path + ": empty name in header column " + std::to_string(j + 1));
      if (!seen.insert(header[j]).second)
        throw Error(path + ": duplicate name '" + header[j] + "' in header");
    }
  }

  std::vector<std::vector<double>> columns(n);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != n)
      throw Error(path + ": row " + std::to_string(row) + " has " +
                  std::to_string(fields.size()) + " fields, expected " +
                  std::to_string(n));
    for (std::size_t j = 0; j < n; ++j) {
      if (fields[j].empty())
        throw Error(path + ": row " + std::to_string(row) + ", column " +
                    std::to_string(j + 1) + " ('" + header[j] + "'): missing value");
      double v = 0.0;
      if (!detail::parse_double(fields[j], v))
        throw Error(path + ": row " + std::to_string(row) + ", column " +
                    std::to_string(j + 1) + " ('" + header[j] +
                    "'): non-numeric value '" + fields[j] + "'");
      if (!std::isfinite(v))
        throw Error(path + ": row " + std::to_string(row) + ", column " +
                    std::to_string(j + 1) + " ('" + header[j] +
                    "'): non-finite value '" + fields[j] + "'");
      columns[j].push_back(v);
    }
  }
  try {
    return TimeSeriesDataset(header, std::move(columns));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline void TimeSeriesDataset::write_csv(std::ostream& out) const {
  for (std::size_t j = 0; j < names_.size(); ++j) {
    if (j) out << ',';
    out << names_[j];
  }
  out << '\n';
  const std::size_t t_count = n_samples();
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (j) out << ',';
      out << detail::format_double(columns_[j][t]);
    }
    out << '\n';
  }
}

inline void TimeSeriesDataset::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file '" + path + "'");
  write_csv(out);
}

}  // namespace tscausal
