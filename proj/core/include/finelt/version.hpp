#pragma once

namespace finelt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace finelt
