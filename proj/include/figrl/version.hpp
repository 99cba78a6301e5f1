#pragma once

namespace figrl {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace figrl
