#pragma once

namespace chimera {
inline constexpr const char* kVersion = "0.1.0";
}
