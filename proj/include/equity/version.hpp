#pragma once

namespace equity {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace equity
