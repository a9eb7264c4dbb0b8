#pragma once

namespace grip {

inline constexpr const char* kVersion = "0.1.0";

}
