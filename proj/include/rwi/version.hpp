#pragma once

namespace rwi {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rwi
