#pragma once

namespace gravloc {

inline constexpr const char* kVersion = "gravloc 1.0.0";

}  // namespace gravloc
