#pragma once

namespace dmh {

inline constexpr const char* kToolName = "dmh";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace dmh
