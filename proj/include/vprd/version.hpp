#pragma once

namespace vprd {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace vprd
