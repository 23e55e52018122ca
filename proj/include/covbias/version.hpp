#pragma once

#include <cstdint>

namespace covbias {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace covbias
