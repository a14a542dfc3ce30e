#pragma once

namespace twinsipm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace twinsipm
