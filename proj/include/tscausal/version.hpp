#pragma once

namespace tscausal {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tscausal
