#pragma once

#include <stdexcept>
#include <string>

namespace tscausal {

/// Error type for all data, configuration, and numerical failures in the
/// library. Messages carry enough context (file, row/column, variable name)
/// to locate the offending input.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tscausal
