#pragma once

#include <string_view>

namespace freespan {

inline constexpr std::string_view kToolName = "freespan";
inline constexpr std::string_view kToolVersion = "0.1.0";

} // namespace freespan
