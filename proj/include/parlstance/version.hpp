#pragma once

namespace parlstance {

inline constexpr const char* kToolName = "parlstance";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace parlstance
