#pragma once

namespace mvsel {
inline constexpr const char* kVersion = "0.1.0";
}
