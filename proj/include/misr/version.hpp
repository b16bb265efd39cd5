#pragma once

namespace misr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace misr
