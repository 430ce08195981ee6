#pragma once

namespace sixv {
inline constexpr const char* kVersion = "0.1.0";
}
