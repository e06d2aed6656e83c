#pragma once

namespace dsmap {

inline constexpr const char* kToolName = "dsmap";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace dsmap
