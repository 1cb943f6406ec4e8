#pragma once

namespace sicsim {

// keep in sync with the project() version in the top-level build file
inline constexpr const char* kVersion = "0.1.0";

}  // namespace sicsim
